//! Fills missing record entries by minimizing a trained network's
//! reconstruction error over the missing coordinates, with known values
//! clamped and an accept-or-retry loop around the chosen optimizer.
//!
//! Per-record work is embarrassingly parallel: the model is read-only, every
//! objective is reentrant, and per-record seeds derive from
//! `(master seed, record index, attempt)`, so results do not depend on worker
//! count or processing order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::missingness::Mask;
use crate::net::{reconstruction_loss, NetworkParams};
use crate::optimize::{
    ga_minimize, mle_minimize, pso_minimize, GaConfig, GdConfig, Objective, OptResult, PsoConfig,
};
use crate::seed;

/// Completed matrix plus the outcome for every record that was imputed.
pub type ImputationOutput = (Vec<Vec<f64>>, Vec<(usize, ImputationResult)>);

/// Mid-range placeholder shown in missing slots before optimization.
pub const MISSING_PLACEHOLDER: f64 = 0.5;

/// One record split into known values and missing coordinate indices.
/// Values are in normalized `[0, 1]` units; missing slots hold the
/// placeholder.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordView {
    values: Vec<f64>,
    missing: Vec<usize>,
}

impl RecordView {
    pub fn new(mut values: Vec<f64>, mut missing: Vec<usize>) -> Result<Self> {
        let d = values.len();
        missing.sort_unstable();
        missing.dedup();
        if missing.iter().any(|&j| j >= d) {
            return Err(Error::shape(format!(
                "missing index out of range for {d}-feature record"
            )));
        }
        for &j in &missing {
            values[j] = MISSING_PLACEHOLDER;
        }
        for (j, &v) in values.iter().enumerate() {
            if !missing.contains(&j) && !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidArgument(format!(
                    "known value at feature {j} must be finite and in [0, 1], got {v}"
                )));
            }
        }
        Ok(Self { values, missing })
    }

    /// Builds a view from a masked row; masked cells may hold anything
    /// (typically NaN).
    pub fn from_masked_row(row: &[f64], mask_row: &[bool]) -> Result<Self> {
        if row.len() != mask_row.len() {
            return Err(Error::shape("row and mask row differ in length"));
        }
        let missing: Vec<usize> = mask_row
            .iter()
            .enumerate()
            .filter_map(|(j, &m)| m.then_some(j))
            .collect();
        Self::new(row.to_vec(), missing)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing(&self) -> &[usize] {
        &self.missing
    }
}

/// Which minimizer searches the missing coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerChoice {
    Ga(GaConfig),
    Pso(PsoConfig),
    Mle(GdConfig),
}

impl OptimizerChoice {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerChoice::Ga(_) => "ga",
            OptimizerChoice::Pso(_) => "pso",
            OptimizerChoice::Mle(_) => "mle",
        }
    }

    fn run(&self, obj: &Objective, attempt_seed: u64) -> Result<OptResult> {
        match self {
            OptimizerChoice::Ga(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = attempt_seed;
                ga_minimize(obj, &cfg)
            }
            OptimizerChoice::Pso(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = attempt_seed;
                pso_minimize(obj, &cfg)
            }
            OptimizerChoice::Mle(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = attempt_seed;
                mle_minimize(obj, &cfg)
            }
        }
    }
}

/// Imputation policy: optimizer, retry budget, and acceptance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputeConfig {
    pub optimizer: OptimizerChoice,
    /// Total attempts per record; each retry reruns the optimizer with a
    /// fresh derived seed.
    pub restarts: usize,
    /// A result is accepted once its objective drops to this level.
    pub accept_threshold: f64,
    /// Root of the per-record, per-attempt seed derivation.
    pub master_seed: u64,
}

impl ImputeConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::config("restarts must be at least 1"));
        }
        if self.accept_threshold.is_nan() || self.accept_threshold <= 0.0 {
            return Err(Error::config("accept_threshold must be positive"));
        }
        Ok(())
    }
}

/// A filled record plus how the search went.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ImputationResult {
    /// Known coordinates bitwise-equal to the input; missing slots hold the
    /// optimizer's solution.
    pub filled: Vec<f64>,
    /// Reconstruction loss of `filled` through the model.
    pub objective: f64,
    pub attempts: usize,
    pub accepted: bool,
}

/// Builds the per-record objective: candidate missing values are substituted
/// into the record, the result is pushed through the network, and the squared
/// reconstruction error over all coordinates is returned. Bounds are `[0, 1]`
/// per missing coordinate; the gradient restricts the network input gradient
/// to the missing slots.
pub fn objective_for_record<'a>(
    model: &'a NetworkParams,
    rec: &RecordView,
) -> Result<Objective<'a>> {
    if rec.missing.is_empty() {
        return Err(Error::NothingToImpute);
    }
    if rec.values.len() != model.input_dim() {
        return Err(Error::shape(format!(
            "record has {} features but model expects {}",
            rec.values.len(),
            model.input_dim()
        )));
    }
    let base = rec.values.clone();
    let slots = rec.missing.clone();
    let bounds = vec![(0.0, 1.0); slots.len()];

    let eval_base = base.clone();
    let eval_slots = slots.clone();
    let eval = move |u: &[f64]| -> f64 {
        let mut x = eval_base.clone();
        for (&j, &v) in eval_slots.iter().zip(u) {
            x[j] = v;
        }
        let trace = model.forward(&x).expect("dimensions validated at build");
        reconstruction_loss(&x, trace.output()).expect("equal lengths by construction")
    };
    let gradient = move |u: &[f64]| -> Vec<f64> {
        let mut x = base.clone();
        for (&j, &v) in slots.iter().zip(u) {
            x[j] = v;
        }
        model
            .grad_input(&x, &slots)
            .expect("indices validated at build")
    };
    Ok(Objective::new(bounds, eval)?.with_gradient(gradient))
}

/// Searches the missing coordinates of one record.
///
/// Runs the configured optimizer up to `restarts` times with derived seeds,
/// accepting the first attempt whose objective reaches the threshold and
/// otherwise returning the best attempt with `accepted = false`. Known
/// coordinates are never altered.
pub fn impute_record(
    model: &NetworkParams,
    rec: &RecordView,
    cfg: &ImputeConfig,
) -> Result<ImputationResult> {
    cfg.validate()?;
    let obj = objective_for_record(model, rec)?;
    let mut best: Option<OptResult> = None;
    let mut attempts = 0;
    let mut accepted = false;
    for attempt in 0..cfg.restarts {
        let attempt_seed = seed::mix(cfg.master_seed, attempt as u64);
        let result = cfg.optimizer.run(&obj, attempt_seed)?;
        attempts = attempt + 1;
        let better = best.as_ref().is_none_or(|b| result.f_star < b.f_star);
        if better {
            best = Some(result);
        }
        if best.as_ref().expect("set above").f_star <= cfg.accept_threshold {
            accepted = true;
            break;
        }
    }
    let best = best.expect("restarts >= 1");
    let mut filled = rec.values.clone();
    for (&j, &v) in rec.missing.iter().zip(&best.x_star) {
        filled[j] = v;
    }
    Ok(ImputationResult {
        filled,
        objective: best.f_star,
        attempts,
        accepted,
    })
}

/// Imputes every incomplete record of a masked dataset on the current rayon
/// pool. Complete records pass through untouched and produce no result entry.
///
/// Per-record seeds derive from `(master seed, record index)`, so the output
/// is identical for any worker count.
pub fn impute_dataset(
    model: &NetworkParams,
    data: &[Vec<f64>],
    mask: &Mask,
    cfg: &ImputeConfig,
) -> Result<ImputationOutput> {
    cfg.validate()?;
    if data.len() != mask.n_records() {
        return Err(Error::shape(format!(
            "data has {} records, mask has {}",
            data.len(),
            mask.n_records()
        )));
    }
    for (r, row) in data.iter().enumerate() {
        if row.len() != mask.n_features() {
            return Err(Error::shape(format!(
                "record {r} has {} features, mask has {}",
                row.len(),
                mask.n_features()
            )));
        }
    }

    let incomplete: Vec<usize> = (0..data.len())
        .filter(|&r| mask.row(r).iter().any(|&m| m))
        .collect();

    let results: Vec<(usize, ImputationResult)> = incomplete
        .par_iter()
        .map(|&r| {
            let rec = RecordView::from_masked_row(&data[r], mask.row(r))?;
            let record_cfg = ImputeConfig {
                master_seed: seed::mix(cfg.master_seed, r as u64),
                ..cfg.clone()
            };
            Ok((r, impute_record(model, &rec, &record_cfg)?))
        })
        .collect::<Result<_>>()?;

    let mut completed = data.to_vec();
    for (r, res) in &results {
        completed[*r] = res.filled.clone();
    }
    Ok((completed, results))
}

/// [`impute_dataset`] on a dedicated pool of `workers` threads.
pub fn impute_dataset_with_workers(
    model: &NetworkParams,
    data: &[Vec<f64>],
    mask: &Mask,
    cfg: &ImputeConfig,
    workers: usize,
) -> Result<ImputationOutput> {
    if workers == 0 {
        return Err(Error::config("worker count must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("could not build worker pool: {e}")))?;
    pool.install(|| impute_dataset(model, data, mask, cfg))
}
