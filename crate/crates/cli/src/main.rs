use clap::Parser;

fn main() {
    let cli = aeimpute::Cli::parse();
    if let Err(err) = aeimpute::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
