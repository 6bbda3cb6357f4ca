//! The five pipeline commands: train, inject, impute, eval, bench.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use aeimpute_core::data::{load_csv, load_mask_csv, save_csv, save_mask_csv, Dataset, NormStats};
use aeimpute_core::eval::{knn_impute, mean_impute, score_masked, MetricReport};
use aeimpute_core::impute::{
    impute_dataset_with_workers, ImputationOutput, ImputationResult, ImputeConfig,
};
use aeimpute_core::missingness::Mask;
use aeimpute_core::model::{load_model, save_model, SavedModel};
use aeimpute_core::net::train;
use aeimpute_core::seed;
use aeimpute_core::Error as CoreError;

use crate::config::{sibling, RunConfig};
use crate::CliError;

// Per-stage seed streams derived from the master seed.
const STREAM_TRAIN: u64 = 0x54;
const STREAM_INJECT: u64 = 0x49;
const STREAM_IMPUTE: u64 = 0x4D;

pub fn run_train(cfg: &RunConfig) -> Result<(), CliError> {
    let data_path = cfg.require_input(cfg.paths.train_data.as_ref(), "train_data")?;
    let model_path = cfg.require_path(cfg.paths.model.as_ref(), "model")?;
    let log_path = cfg
        .paths
        .train_log
        .clone()
        .unwrap_or_else(|| sibling(&model_path, ".log"));

    let dataset = load_csv(&data_path)?;
    let used = dataset.complete_record_indices();
    if used.is_empty() {
        return Err(CoreError::IncompleteTrainingData(format!(
            "{}: every record has at least one missing cell",
            data_path.display()
        ))
        .into());
    }
    let excluded: Vec<usize> = (0..dataset.n_records())
        .filter(|r| !used.contains(r))
        .collect();
    let complete_rows: Vec<Vec<f64>> = used.iter().map(|&r| dataset.values[r].clone()).collect();

    let norm_stats = NormStats::fit(&complete_rows)?;
    let normalized = norm_stats.normalize_rows(&complete_rows, true);

    let train_cfg = cfg.train.to_train_config(seed::mix(cfg.seed, STREAM_TRAIN));
    let (params, history) = train(&normalized, &train_cfg, cfg.train.denoising)?;

    save_model(
        &model_path,
        &SavedModel {
            params,
            norm_stats,
            train_loss: history.last().copied(),
        },
    )?;

    let mut log = String::new();
    let _ = writeln!(log, "train_data = {}", data_path.display());
    let _ = writeln!(log, "records = {}", dataset.n_records());
    let _ = writeln!(log, "complete_records_used = {}", used.len());
    let _ = writeln!(log, "used_record_indices = {used:?}");
    let _ = writeln!(log, "excluded_record_indices = {excluded:?}");
    let _ = writeln!(log, "denoising = {}", cfg.train.denoising);
    let _ = writeln!(log, "epochs = {}", history.len());
    for (epoch, loss) in history.iter().enumerate() {
        let _ = writeln!(log, "epoch {epoch}: {loss}");
    }
    if let Some(last) = history.last() {
        let _ = writeln!(log, "final_loss = {last}");
    }
    std::fs::write(&log_path, log)?;

    println!(
        "trained on {} of {} records ({} excluded for missing cells)",
        used.len(),
        dataset.n_records(),
        excluded.len()
    );
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        println!("epoch-mean loss: {first} -> {last}");
    }
    println!("model written to {}", model_path.display());
    Ok(())
}

pub fn run_inject(cfg: &RunConfig) -> Result<(), CliError> {
    let truth_path = cfg.require_input(cfg.paths.truth.as_ref(), "truth")?;
    let masked_path = cfg.require_path(cfg.paths.masked_data.as_ref(), "masked_data")?;
    let mask_path = cfg
        .paths
        .mask
        .clone()
        .unwrap_or_else(|| sibling(&masked_path, ".mask.csv"));

    let dataset = load_csv(&truth_path)?;
    if !dataset.is_complete() {
        return Err(CoreError::InvalidArgument(format!(
            "{}: injection needs a complete dataset ({} missing cells found)",
            truth_path.display(),
            dataset.n_missing()
        ))
        .into());
    }
    let mech = cfg.mechanism.to_spec(dataset.n_features())?;
    let pattern = cfg.pattern.to_spec(dataset.n_features())?;
    let (masked, mask) = aeimpute_core::missingness::inject(
        &dataset.values,
        &mech,
        &pattern,
        seed::mix(cfg.seed, STREAM_INJECT),
    )?;

    save_csv(
        &masked_path,
        &Dataset {
            feature_names: dataset.feature_names.clone(),
            values: masked,
        },
    )?;
    save_mask_csv(&mask_path, &mask, &dataset.feature_names)?;

    println!(
        "injected {} missing cells ({:.1}%) under {}/{}",
        mask.n_missing(),
        100.0 * aeimpute_core::missingness::missing_rate(&mask),
        mech.kind_name(),
        pattern.kind_name()
    );
    println!(
        "masked data written to {}, mask to {}",
        masked_path.display(),
        mask_path.display()
    );
    Ok(())
}

/// Acceptance threshold: configured value, or twice the stored training loss.
fn accept_threshold(cfg: &RunConfig, model: &SavedModel) -> Result<f64, CliError> {
    if let Some(t) = cfg.impute.accept_threshold {
        return Ok(t);
    }
    match model.train_loss {
        Some(loss) if loss > 0.0 => Ok(2.0 * loss),
        _ => Err(CliError::config(
            "model carries no training loss; set impute.accept_threshold explicitly".into(),
        )),
    }
}

#[derive(serde::Serialize)]
struct ImputeLogEntry {
    record: usize,
    objective: f64,
    attempts: usize,
    accepted: bool,
}

fn write_impute_log(
    path: &Path,
    results: &[(usize, ImputationResult)],
) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)?;
    for (record, res) in results {
        let entry = ImputeLogEntry {
            record: *record,
            objective: res.objective,
            attempts: res.attempts,
            accepted: res.accepted,
        };
        let line = serde_json::to_string(&entry)
            .map_err(|e| CliError::config(format!("could not serialize log entry: {e}")))?;
        writeln!(file, "{line}")?;
    }
    Ok(())
}

/// Imputes `masked` (raw units) through a model, returning the completed
/// matrix in raw units: observed cells verbatim, missing cells denormalized
/// from the optimizer's solution.
fn impute_raw(
    model: &SavedModel,
    masked: &[Vec<f64>],
    mask: &Mask,
    impute_cfg: &ImputeConfig,
    workers: usize,
) -> Result<ImputationOutput, CliError> {
    let normalized = model.norm_stats.normalize_rows(masked, true);
    let (completed_norm, results) =
        impute_dataset_with_workers(&model.params, &normalized, mask, impute_cfg, workers)?;
    let mut completed = masked.to_vec();
    for (r, row) in completed.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if mask.is_missing(r, j) {
                *v = model.norm_stats.denormalize_value(j, completed_norm[r][j]);
            }
        }
    }
    Ok((completed, results))
}

fn load_masked_with_mask(cfg: &RunConfig) -> Result<(Dataset, Mask), CliError> {
    let masked_path = cfg.require_input(cfg.paths.masked_data.as_ref(), "masked_data")?;
    let dataset = load_csv(&masked_path)?;
    // The `?` cells are authoritative; the sidecar, when given, must agree.
    let mask = dataset.missing_mask();
    if let Some(mask_path) = &cfg.paths.mask {
        if mask_path.exists() {
            let sidecar = load_mask_csv(mask_path)?;
            if sidecar != mask {
                return Err(CliError::config(format!(
                    "mask sidecar {} disagrees with `?` cells in {}",
                    mask_path.display(),
                    masked_path.display()
                )));
            }
        }
    }
    Ok((dataset, mask))
}

pub fn run_impute(cfg: &RunConfig) -> Result<(), CliError> {
    let model_path = cfg.require_input(cfg.paths.model.as_ref(), "model")?;
    let completed_path = cfg.require_path(cfg.paths.completed.as_ref(), "completed")?;
    let log_path = cfg
        .paths
        .impute_log
        .clone()
        .unwrap_or_else(|| sibling(&completed_path, ".log.jsonl"));

    let model = load_model(&model_path)?;
    let (dataset, mask) = load_masked_with_mask(cfg)?;
    if dataset.n_features() != model.params.input_dim() {
        return Err(CoreError::Shape(format!(
            "masked data has {} features, model expects {}",
            dataset.n_features(),
            model.params.input_dim()
        ))
        .into());
    }

    let impute_cfg = ImputeConfig {
        optimizer: cfg.optimizer_choice()?,
        restarts: cfg.impute.restarts,
        accept_threshold: accept_threshold(cfg, &model)?,
        master_seed: seed::mix(cfg.seed, STREAM_IMPUTE),
    };
    let (completed, results) =
        impute_raw(&model, &dataset.values, &mask, &impute_cfg, cfg.workers)?;

    save_csv(
        &completed_path,
        &Dataset {
            feature_names: dataset.feature_names.clone(),
            values: completed,
        },
    )?;
    write_impute_log(&log_path, &results)?;

    let accepted = results.iter().filter(|(_, r)| r.accepted).count();
    println!(
        "imputed {} records ({} accepted at threshold {}) with {}",
        results.len(),
        accepted,
        impute_cfg.accept_threshold,
        impute_cfg.optimizer.name()
    );
    println!("completed data written to {}", completed_path.display());
    Ok(())
}

/// Loads truth/completed pairs and scores the originally-missing cells in a
/// normalized metric space fitted on the truth data.
fn score_files(
    truth: &Dataset,
    completed: &[Vec<f64>],
    mask: &Mask,
    tau: f64,
) -> Result<MetricReport, CliError> {
    let stats = NormStats::fit(&truth.values)?;
    let norm_truth = stats.normalize_rows(&truth.values, false);
    let norm_completed = stats.normalize_rows(completed, false);
    Ok(score_masked(&norm_truth, &norm_completed, mask, tau)?)
}

pub fn run_eval(cfg: &RunConfig) -> Result<(), CliError> {
    let truth_path = cfg.require_input(cfg.paths.truth.as_ref(), "truth")?;
    let completed_path = cfg.require_input(cfg.paths.completed.as_ref(), "completed")?;
    let mask_path = cfg.require_input(cfg.paths.mask.as_ref(), "mask")?;
    let report_path = cfg.require_path(cfg.paths.report.as_ref(), "report")?;

    let truth = load_csv(&truth_path)?;
    let completed = load_csv(&completed_path)?;
    let mask = load_mask_csv(&mask_path)?;
    if completed.n_records() != truth.n_records()
        || completed.n_features() != truth.n_features()
    {
        return Err(CoreError::Shape(format!(
            "completed data is {}x{}, truth is {}x{}",
            completed.n_records(),
            completed.n_features(),
            truth.n_records(),
            truth.n_features()
        ))
        .into());
    }

    let report = score_files(&truth, &completed.values, &mask, cfg.eval.tau)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::config(format!("could not serialize report: {e}")))?;
    std::fs::write(&report_path, json)?;
    print!("{}", report.text_block());
    println!("report written to {}", report_path.display());
    Ok(())
}

#[derive(serde::Serialize)]
struct BenchReport {
    n_records: usize,
    n_features: usize,
    complete_records_in_masked_data: usize,
    n_imputed_cells: usize,
    methods: Vec<BenchEntry>,
}

#[derive(serde::Serialize)]
struct BenchEntry {
    method: String,
    report: MetricReport,
}

pub fn run_bench(cfg: &RunConfig) -> Result<(), CliError> {
    let model_path = cfg.require_input(cfg.paths.model.as_ref(), "model")?;
    let truth_path = cfg.require_input(cfg.paths.truth.as_ref(), "truth")?;
    let report_path = cfg.require_path(cfg.paths.bench_report.as_ref(), "bench_report")?;

    let model = load_model(&model_path)?;
    let truth = load_csv(&truth_path)?;
    let (masked, mask) = load_masked_with_mask(cfg)?;
    let threshold = accept_threshold(cfg, &model)?;
    let impute_master = seed::mix(cfg.seed, STREAM_IMPUTE);

    let mut methods: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for (idx, optimizer) in [
        aeimpute_core::impute::OptimizerChoice::Ga(cfg.ga.clone()),
        aeimpute_core::impute::OptimizerChoice::Pso(cfg.pso.clone()),
        aeimpute_core::impute::OptimizerChoice::Mle(cfg.mle.clone()),
    ]
    .into_iter()
    .enumerate()
    {
        let name = format!("model+{}", optimizer.name());
        let impute_cfg = ImputeConfig {
            optimizer,
            restarts: cfg.impute.restarts,
            accept_threshold: threshold,
            master_seed: seed::mix(impute_master, idx as u64),
        };
        let (completed, _) =
            impute_raw(&model, &masked.values, &mask, &impute_cfg, cfg.workers)?;
        methods.push((name, completed));
    }
    methods.push(("mean".into(), mean_impute(&masked.values, &mask)?));
    methods.push((
        format!("knn(k={})", cfg.bench.knn_k),
        knn_impute(&masked.values, &mask, cfg.bench.knn_k)?,
    ));

    let complete_records = (0..mask.n_records())
        .filter(|&r| mask.row(r).iter().all(|&m| !m))
        .count();
    let mut entries = Vec::new();
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<12} {:>10} {:>10} {:>10} {:>8} {:>6}",
        "method", "rmse", "mse", "pearson_r", "rel_acc", "n"
    );
    for (name, completed) in &methods {
        let report = score_files(&truth, completed, &mask, cfg.eval.tau)?;
        let pearson = report
            .pearson_r
            .map_or("undef".to_string(), |r| format!("{r:.4}"));
        let _ = writeln!(
            table,
            "{:<12} {:>10.5} {:>10.6} {:>10} {:>8.3} {:>6}",
            name, report.rmse, report.mse, pearson, report.relative_accuracy, report.n_imputed
        );
        entries.push(BenchEntry {
            method: name.clone(),
            report,
        });
    }

    let bench = BenchReport {
        n_records: masked.n_records(),
        n_features: masked.n_features(),
        complete_records_in_masked_data: complete_records,
        n_imputed_cells: mask.n_missing(),
        methods: entries,
    };
    let json = serde_json::to_string_pretty(&bench)
        .map_err(|e| CliError::config(format!("could not serialize bench report: {e}")))?;
    std::fs::write(&report_path, json)?;
    let table_path = report_path.with_extension("txt");
    std::fs::write(&table_path, &table)?;

    println!(
        "benchmark over {} masked cells ({} complete records in masked data)",
        bench.n_imputed_cells, bench.complete_records_in_masked_data
    );
    print!("{table}");
    println!(
        "reports written to {} and {}",
        report_path.display(),
        table_path.display()
    );
    Ok(())
}
