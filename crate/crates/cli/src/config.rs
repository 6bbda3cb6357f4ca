//! Run configuration: a sectioned key-value (TOML) file plus command-line
//! overrides. Every key has a documented default except the file paths each
//! command reads or writes and the master seed.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use aeimpute_core::impute::OptimizerChoice;
use aeimpute_core::missingness::{MechanismSpec, PatternSpec};
use aeimpute_core::net::TrainConfig;
use aeimpute_core::optimize::{GaConfig, GdConfig, PsoConfig};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Master seed; every stochastic stage derives its own stream from it.
    pub seed: Option<u64>,
    /// Worker threads for imputation. Output never depends on this.
    pub workers: Option<usize>,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub mechanism: MechanismSection,
    #[serde(default)]
    pub pattern: PatternSection,
    #[serde(default)]
    pub impute: ImputeSection,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub mle: GdConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    /// Complete (or mostly complete) CSV used for training.
    pub train_data: Option<PathBuf>,
    /// Ground-truth CSV for inject / eval / bench.
    pub truth: Option<PathBuf>,
    /// CSV with `?` markers, written by inject and read by impute / bench.
    pub masked_data: Option<PathBuf>,
    /// 0/1 mask sidecar; defaults to `<masked_data>.mask.csv`.
    pub mask: Option<PathBuf>,
    /// Model JSON, written by train and read by impute / bench.
    pub model: Option<PathBuf>,
    /// Completed CSV written by impute.
    pub completed: Option<PathBuf>,
    /// Metric report JSON written by eval.
    pub report: Option<PathBuf>,
    /// Comparison report JSON written by bench; the text table lands next to
    /// it with extension `.txt`.
    pub bench_report: Option<PathBuf>,
    /// Training log; defaults to `<model>.log`.
    pub train_log: Option<PathBuf>,
    /// Per-record imputation log (JSON lines); defaults to
    /// `<completed>.log.jsonl`.
    pub impute_log: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub corruption: f64,
    pub init_scale: Option<f64>,
    pub pretrain: bool,
    pub tied: bool,
    /// Train the denoising variant (reconstruct clean records from corrupted
    /// copies).
    pub denoising: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            hidden_sizes: base.hidden_sizes,
            learning_rate: base.learning_rate,
            epochs: base.epochs,
            batch_size: base.batch_size,
            corruption: base.corruption,
            init_scale: base.init_scale,
            pretrain: base.pretrain,
            tied: base.tied,
            denoising: false,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_sizes: self.hidden_sizes.clone(),
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            corruption: self.corruption,
            init_scale: self.init_scale,
            seed,
            pretrain: self.pretrain,
            tied: self.tied,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismSection {
    /// One of `mcar`, `mar`, `mnar`.
    pub kind: String,
    /// Feature indices eligible to go missing; default all.
    pub targets: Option<Vec<usize>>,
    /// MCAR cell rate.
    pub rate: f64,
    /// MAR driver features.
    pub drivers: Vec<usize>,
    /// Logistic intercept (MAR / MNAR).
    pub intercept: f64,
    /// Logistic slopes over drivers (MAR).
    pub slopes: Vec<f64>,
    /// Logistic slope on the target's own value (MNAR).
    pub slope: f64,
}

impl Default for MechanismSection {
    fn default() -> Self {
        Self {
            kind: "mcar".into(),
            targets: None,
            rate: 0.2,
            drivers: Vec::new(),
            intercept: 0.0,
            slopes: Vec::new(),
            slope: 1.0,
        }
    }
}

impl MechanismSection {
    pub fn to_spec(&self, n_features: usize) -> Result<MechanismSpec, CliError> {
        let targets = self
            .targets
            .clone()
            .unwrap_or_else(|| (0..n_features).collect());
        match self.kind.as_str() {
            "mcar" => Ok(MechanismSpec::Mcar {
                targets,
                rate: self.rate,
            }),
            "mar" => Ok(MechanismSpec::Mar {
                targets,
                drivers: self.drivers.clone(),
                intercept: self.intercept,
                slopes: self.slopes.clone(),
            }),
            "mnar" => Ok(MechanismSpec::Mnar {
                targets,
                intercept: self.intercept,
                slope: self.slope,
            }),
            other => Err(CliError::config(format!(
                "mechanism.kind must be mcar, mar, or mnar, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSection {
    /// `arbitrary` or `monotone`.
    pub kind: String,
    /// Feature order for the monotone staircase; default natural order.
    pub order: Option<Vec<usize>>,
}

impl Default for PatternSection {
    fn default() -> Self {
        Self {
            kind: "arbitrary".into(),
            order: None,
        }
    }
}

impl PatternSection {
    pub fn to_spec(&self, n_features: usize) -> Result<PatternSpec, CliError> {
        match self.kind.as_str() {
            "arbitrary" => Ok(PatternSpec::Arbitrary),
            "monotone" => Ok(PatternSpec::Monotone {
                order: self
                    .order
                    .clone()
                    .unwrap_or_else(|| (0..n_features).collect()),
            }),
            other => Err(CliError::config(format!(
                "pattern.kind must be arbitrary or monotone, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeSection {
    /// `ga`, `pso`, or `mle`.
    pub optimizer: String,
    pub restarts: usize,
    /// Acceptance threshold on the reconstruction error; default is twice the
    /// model's final training loss.
    pub accept_threshold: Option<f64>,
}

impl Default for ImputeSection {
    fn default() -> Self {
        Self {
            optimizer: "ga".into(),
            restarts: 3,
            accept_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Relative-accuracy tolerance in normalized units.
    pub tau: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { tau: 0.1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    /// Donor count for the kNN baseline.
    pub knn_k: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { knn_k: 5 }
    }
}

/// The fully resolved configuration a command runs with.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub paths: PathsSection,
    pub train: TrainSection,
    pub mechanism: MechanismSection,
    pub pattern: PatternSection,
    pub impute: ImputeSection,
    pub ga: GaConfig,
    pub pso: PsoConfig,
    pub mle: GdConfig,
    pub eval: EvalSection,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    /// Applies global CLI overrides and enforces the no-default-seed rule.
    pub fn resolve(
        file: FileConfig,
        seed_flag: Option<u64>,
        workers_flag: Option<usize>,
        optimizer_flag: Option<String>,
    ) -> Result<Self, CliError> {
        let seed = seed_flag.or(file.seed).ok_or_else(|| {
            CliError::config("a master seed is required (config `seed` or --seed)".into())
        })?;
        let workers = workers_flag.or(file.workers).unwrap_or(1);
        if workers == 0 {
            return Err(CliError::config("workers must be at least 1".into()));
        }
        let mut impute = file.impute;
        if let Some(opt) = optimizer_flag {
            impute.optimizer = opt;
        }
        Ok(Self {
            seed,
            workers,
            paths: file.paths,
            train: file.train,
            mechanism: file.mechanism,
            pattern: file.pattern,
            impute,
            ga: file.ga,
            pso: file.pso,
            mle: file.mle,
            eval: file.eval,
            bench: file.bench,
        })
    }

    pub fn optimizer_choice(&self) -> Result<OptimizerChoice, CliError> {
        match self.impute.optimizer.as_str() {
            "ga" => Ok(OptimizerChoice::Ga(self.ga.clone())),
            "pso" => Ok(OptimizerChoice::Pso(self.pso.clone())),
            "mle" => Ok(OptimizerChoice::Mle(self.mle.clone())),
            other => Err(CliError::config(format!(
                "optimizer must be ga, pso, or mle, got `{other}`"
            ))),
        }
    }

    pub fn require_path(&self, field: Option<&PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        field
            .cloned()
            .ok_or_else(|| CliError::config(format!("paths.{key} is required for this command")))
    }

    pub fn require_input(&self, field: Option<&PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        let path = self.require_path(field, key)?;
        if !path.exists() {
            return Err(CliError::config(format!(
                "paths.{key} = {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }
}

/// `<base>.suffix` next to an artifact path.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
