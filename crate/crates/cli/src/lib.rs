//! Command-line workflow for autoencoder-based missing data imputation.
//!
//! `train` fits the model on the complete records of a CSV, `inject`
//! simulates missingness on complete data, `impute` fills masked data through
//! the trained model, `eval` scores completed data against ground truth, and
//! `bench` compares the model-based optimizers against mean and kNN
//! baselines.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

use config::{FileConfig, RunConfig};

/// Exit codes: 2 data parse, 3 configuration, 4 numeric/data, 5 io.
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(aeimpute_core::Error),
}

impl CliError {
    fn config(msg: String) -> Self {
        CliError::Config(msg)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(err) => match err {
                aeimpute_core::Error::Parse { .. } => EXIT_PARSE,
                aeimpute_core::Error::InvalidConfig(_) => EXIT_CONFIG,
                aeimpute_core::Error::Io(_) => EXIT_IO,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<aeimpute_core::Error> for CliError {
    fn from(err: aeimpute_core::Error) -> Self {
        CliError::Core(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Core(aeimpute_core::Error::Io(err))
    }
}

#[derive(Parser, Debug)]
#[command(name = "aeimpute", version, about = "Autoencoder-based missing data imputation")]
pub struct Cli {
    /// Run-configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed, overriding the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for imputation; never changes results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Optimizer for impute/bench: ga, pso, or mle.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the autoencoder on the complete records of the training CSV.
    Train {
        #[arg(long)]
        epochs: Option<usize>,
        /// Comma-separated hidden layer sizes, e.g. 5,3.
        #[arg(long, value_delimiter = ',')]
        hidden_sizes: Option<Vec<usize>>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Masking-noise level for denoising training.
        #[arg(long)]
        corruption: Option<f64>,
        #[arg(long)]
        init_scale: Option<f64>,
        /// Train the denoising variant.
        #[arg(long)]
        denoising: bool,
        /// Greedy layerwise pretraining before fine-tuning.
        #[arg(long)]
        pretrain: bool,
        /// Tie decoder weights to encoder transposes.
        #[arg(long)]
        tied: bool,
    },
    /// Inject missing values into a complete CSV.
    Inject {
        /// Mechanism kind: mcar, mar, or mnar.
        #[arg(long)]
        kind: Option<String>,
        /// MCAR cell rate.
        #[arg(long)]
        rate: Option<f64>,
        /// Pattern kind: arbitrary or monotone.
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Fill masked data by optimizing against the trained model.
    Impute {
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        accept_threshold: Option<f64>,
    },
    /// Score completed data against ground truth on originally-missing cells.
    Eval {
        /// Relative-accuracy tolerance in normalized units.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Compare model+GA, model+PSO, model+MLE, mean, and kNN on one masked
    /// dataset.
    Bench {
        #[arg(long)]
        knn_k: Option<usize>,
    },
}

/// Folds per-command flag overrides into the file config.
fn apply_overrides(file: &mut FileConfig, command: &Command) {
    match command {
        Command::Train {
            epochs,
            hidden_sizes,
            learning_rate,
            batch_size,
            corruption,
            init_scale,
            denoising,
            pretrain,
            tied,
        } => {
            if let Some(v) = epochs {
                file.train.epochs = *v;
            }
            if let Some(v) = hidden_sizes {
                file.train.hidden_sizes = v.clone();
            }
            if let Some(v) = learning_rate {
                file.train.learning_rate = *v;
            }
            if let Some(v) = batch_size {
                file.train.batch_size = *v;
            }
            if let Some(v) = corruption {
                file.train.corruption = *v;
            }
            if let Some(v) = init_scale {
                file.train.init_scale = Some(*v);
            }
            file.train.denoising |= *denoising;
            file.train.pretrain |= *pretrain;
            file.train.tied |= *tied;
        }
        Command::Inject {
            kind,
            rate,
            pattern,
        } => {
            if let Some(v) = kind {
                file.mechanism.kind = v.clone();
            }
            if let Some(v) = rate {
                file.mechanism.rate = *v;
            }
            if let Some(v) = pattern {
                file.pattern.kind = v.clone();
            }
        }
        Command::Impute {
            restarts,
            accept_threshold,
        } => {
            if let Some(v) = restarts {
                file.impute.restarts = *v;
            }
            if let Some(v) = accept_threshold {
                file.impute.accept_threshold = Some(*v);
            }
        }
        Command::Eval { tau } => {
            if let Some(v) = tau {
                file.eval.tau = *v;
            }
        }
        Command::Bench { knn_k } => {
            if let Some(v) = knn_k {
                file.bench.knn_k = *v;
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut file = RunConfig::load(&cli.config)?;
    apply_overrides(&mut file, &cli.command);
    let cfg = RunConfig::resolve(file, cli.seed, cli.workers, cli.optimizer)?;
    match &cli.command {
        Command::Train { .. } => commands::run_train(&cfg),
        Command::Inject { .. } => commands::run_inject(&cfg),
        Command::Impute { .. } => commands::run_impute(&cfg),
        Command::Eval { .. } => commands::run_eval(&cfg),
        Command::Bench { .. } => commands::run_bench(&cfg),
    }
}
