//! Injects missing values into complete datasets under the MCAR, MAR and MNAR
//! mechanisms with arbitrary or monotone patterns, and validates pattern
//! claims.
//!
//! MAR and MNAR use a logistic link on min-max-normalized feature values, so
//! slope parameters are scale-free. Injection never mutates its input; the
//! caller keeps the ground truth for evaluation.

use crate::error::{Error, Result};
use crate::seed;
use rand::Rng;

/// Per-cell missing indicator; `true` means the cell is missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    cells: Vec<Vec<bool>>,
    n_features: usize,
}

impl Mask {
    pub fn new(cells: Vec<Vec<bool>>) -> Result<Self> {
        let n_features = cells.first().map_or(0, |r| r.len());
        if cells.iter().any(|r| r.len() != n_features) {
            return Err(Error::shape("mask rows differ in length"));
        }
        Ok(Self { cells, n_features })
    }

    /// All-observed mask, the degenerate zero-rate case.
    pub fn all_observed(n_records: usize, n_features: usize) -> Self {
        Self {
            cells: vec![vec![false; n_features]; n_records],
            n_features,
        }
    }

    pub fn n_records(&self) -> usize {
        self.cells.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_missing(&self, record: usize, feature: usize) -> bool {
        self.cells[record][feature]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.cells
    }

    pub fn row(&self, record: usize) -> &[bool] {
        &self.cells[record]
    }

    /// Count of missing cells.
    pub fn n_missing(&self) -> usize {
        self.cells
            .iter()
            .map(|r| r.iter().filter(|&&m| m).count())
            .sum()
    }
}

/// How cells are chosen to go missing.
#[derive(Debug, Clone, PartialEq)]
pub enum MechanismSpec {
    /// Each target cell goes missing independently with probability `rate`,
    /// regardless of any data value.
    Mcar { targets: Vec<usize>, rate: f64 },
    /// Per record, the missing probability of every target cell is
    /// `sigmoid(intercept + slopes . normalized driver values)`; drivers and
    /// targets must be disjoint.
    Mar {
        targets: Vec<usize>,
        drivers: Vec<usize>,
        intercept: f64,
        slopes: Vec<f64>,
    },
    /// Per cell, the missing probability is
    /// `sigmoid(intercept + slope * normalized own value)`.
    Mnar {
        targets: Vec<usize>,
        intercept: f64,
        slope: f64,
    },
}

impl MechanismSpec {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let targets = match self {
            MechanismSpec::Mcar { targets, rate } => {
                if !(rate.is_finite() && *rate > 0.0 && *rate < 1.0) {
                    return Err(Error::config("MCAR rate must lie strictly in (0, 1)"));
                }
                targets
            }
            MechanismSpec::Mar {
                targets,
                drivers,
                slopes,
                ..
            } => {
                if drivers.is_empty() {
                    return Err(Error::config("MAR requires at least one driver feature"));
                }
                if slopes.len() != drivers.len() {
                    return Err(Error::config(format!(
                        "MAR has {} slopes for {} drivers",
                        slopes.len(),
                        drivers.len()
                    )));
                }
                if drivers.iter().any(|d| targets.contains(d)) {
                    return Err(Error::config(
                        "MAR drivers must be disjoint from targets",
                    ));
                }
                if drivers.iter().any(|&d| d >= n_features) {
                    return Err(Error::config("MAR driver index out of range"));
                }
                targets
            }
            MechanismSpec::Mnar { targets, .. } => targets,
        };
        if targets.is_empty() {
            return Err(Error::config("mechanism needs at least one target feature"));
        }
        if targets.iter().any(|&t| t >= n_features) {
            return Err(Error::config("target feature index out of range"));
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MechanismSpec::Mcar { .. } => "mcar",
            MechanismSpec::Mar { .. } => "mar",
            MechanismSpec::Mnar { .. } => "mnar",
        }
    }
}

/// Where missing cells may appear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternSpec {
    /// Missing cells anywhere.
    Arbitrary,
    /// Missingness is upward closed along `order`: a missing variable makes
    /// every later variable in `order` missing too.
    Monotone { order: Vec<usize> },
}

impl PatternSpec {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        match self {
            PatternSpec::Arbitrary => Ok(()),
            PatternSpec::Monotone { order } => check_permutation(order, n_features),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PatternSpec::Arbitrary => "arbitrary",
            PatternSpec::Monotone { .. } => "monotone",
        }
    }
}

fn check_permutation(order: &[usize], n_features: usize) -> Result<()> {
    if order.len() != n_features {
        return Err(Error::config(format!(
            "order has {} entries for {n_features} features",
            order.len()
        )));
    }
    let mut seen = vec![false; n_features];
    for &j in order {
        if j >= n_features || seen[j] {
            return Err(Error::config(
                "order must be a permutation of the feature indices",
            ));
        }
        seen[j] = true;
    }
    Ok(())
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Samples a mask under `mech` and `pattern` and returns the masked copy of
/// `dataset` (missing cells hold NaN) together with the mask. Deterministic
/// for a fixed seed.
pub fn inject(
    dataset: &[Vec<f64>],
    mech: &MechanismSpec,
    pattern: &PatternSpec,
    seed_value: u64,
) -> Result<(Vec<Vec<f64>>, Mask)> {
    let n_features = dataset.first().map_or(0, |r| r.len());
    for (r, row) in dataset.iter().enumerate() {
        if row.len() != n_features {
            return Err(Error::shape(format!("record {r} has ragged length")));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "record {r} is not complete; injection needs a complete dataset"
            )));
        }
    }
    mech.validate(n_features)?;
    pattern.validate(n_features)?;

    // Column min-max for the logistic links, so slopes are scale-free.
    let (mins, maxs) = column_ranges(dataset, n_features);
    let norm = |col: usize, v: f64| -> f64 {
        let span = maxs[col] - mins[col];
        if span > 0.0 {
            (v - mins[col]) / span
        } else {
            0.5
        }
    };

    let mut rng = seed::rng(seed_value);
    let mut cells = vec![vec![false; n_features]; dataset.len()];
    for (r, row) in dataset.iter().enumerate() {
        match mech {
            MechanismSpec::Mcar { targets, rate } => {
                for &j in targets {
                    cells[r][j] = rng.gen::<f64>() < *rate;
                }
            }
            MechanismSpec::Mar {
                targets,
                drivers,
                intercept,
                slopes,
            } => {
                let mut t = *intercept;
                for (d, s) in drivers.iter().zip(slopes) {
                    t += s * norm(*d, row[*d]);
                }
                let p = sigmoid(t);
                for &j in targets {
                    cells[r][j] = rng.gen::<f64>() < p;
                }
            }
            MechanismSpec::Mnar {
                targets,
                intercept,
                slope,
            } => {
                for &j in targets {
                    let p = sigmoid(intercept + slope * norm(j, row[j]));
                    cells[r][j] = rng.gen::<f64>() < p;
                }
            }
        }
    }

    if let PatternSpec::Monotone { order } = pattern {
        close_monotone(&mut cells, order);
    }

    let masked = dataset
        .iter()
        .zip(&cells)
        .map(|(row, mask_row)| {
            row.iter()
                .zip(mask_row)
                .map(|(&v, &m)| if m { f64::NAN } else { v })
                .collect()
        })
        .collect();
    let mask = Mask { cells, n_features };
    Ok((masked, mask))
}

fn column_ranges(dataset: &[Vec<f64>], n_features: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mins = vec![f64::INFINITY; n_features];
    let mut maxs = vec![f64::NEG_INFINITY; n_features];
    for row in dataset {
        for (j, &v) in row.iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    (mins, maxs)
}

/// Propagates missingness to every later variable in `order`.
fn close_monotone(cells: &mut [Vec<bool>], order: &[usize]) {
    for row in cells {
        let mut hit = false;
        for &j in order {
            hit |= row[j];
            row[j] = hit;
        }
    }
}

/// True iff every record satisfies the monotone condition along `order`:
/// an observed variable implies every earlier variable in `order` is
/// observed.
pub fn validate_monotone(mask: &Mask, order: &[usize]) -> Result<bool> {
    check_permutation(order, mask.n_features())?;
    Ok(mask.rows().iter().all(|row| {
        let mut missing_seen = false;
        for &j in order {
            if row[j] {
                missing_seen = true;
            } else if missing_seen {
                return false;
            }
        }
        true
    }))
}

/// Fraction of missing cells; 0 for an empty mask.
pub fn missing_rate(mask: &Mask) -> f64 {
    let total = mask.n_records() * mask.n_features();
    if total == 0 {
        return 0.0;
    }
    mask.n_missing() as f64 / total as f64
}
