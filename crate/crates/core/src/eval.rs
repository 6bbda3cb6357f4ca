//! Ground-truth evaluation metrics and the mean / kNN baseline imputers used
//! for comparison runs.

use crate::error::{Error, Result};
use crate::missingness::Mask;

/// Metrics over imputed cells. `pearson_r` is `None` when either vector is
/// constant, where the correlation is undefined.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricReport {
    pub mse: f64,
    pub rmse: f64,
    pub pearson_r: Option<f64>,
    /// Fraction of cells with `|imputed - truth| <= tau`.
    pub relative_accuracy: f64,
    pub tau: f64,
    pub n_imputed: usize,
    pub per_feature: Vec<FeatureScore>,
}

/// Per-feature slice of the error breakdown.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeatureScore {
    pub feature: usize,
    pub n: usize,
    pub mse: f64,
    pub rmse: f64,
}

impl MetricReport {
    /// Flat key-value rendering for logs and stdout.
    pub fn text_block(&self) -> String {
        let pearson = match self.pearson_r {
            Some(r) => format!("{r}"),
            None => "undefined".into(),
        };
        let mut out = format!(
            "n_imputed = {}\nmse = {}\nrmse = {}\npearson_r = {}\nrelative_accuracy(tau={}) = {}\n",
            self.n_imputed, self.mse, self.rmse, pearson, self.tau, self.relative_accuracy
        );
        for f in &self.per_feature {
            out.push_str(&format!(
                "feature[{}]: n = {}, rmse = {}\n",
                f.feature, f.n, f.rmse
            ));
        }
        out
    }
}

/// Scores imputed values against ground truth over the originally-missing
/// cells (both vectors gathered in the same order).
pub fn score(truth: &[f64], imputed: &[f64], tau: f64) -> Result<MetricReport> {
    if truth.len() != imputed.len() {
        return Err(Error::InvalidArgument(format!(
            "truth has {} cells, imputed has {}",
            truth.len(),
            imputed.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("nothing to score: no cells".into()));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidArgument("tau must be positive".into()));
    }
    let n = truth.len() as f64;
    let mse = truth
        .iter()
        .zip(imputed)
        .map(|(t, i)| (t - i) * (t - i))
        .sum::<f64>()
        / n;
    let within = truth
        .iter()
        .zip(imputed)
        .filter(|(t, i)| (*t - *i).abs() <= tau)
        .count();
    Ok(MetricReport {
        mse,
        rmse: mse.sqrt(),
        pearson_r: pearson(truth, imputed),
        relative_accuracy: within as f64 / n,
        tau,
        n_imputed: truth.len(),
        per_feature: Vec::new(),
    })
}

/// Gathers the masked cells of both matrices and scores them, adding a
/// per-feature breakdown.
pub fn score_masked(
    truth: &[Vec<f64>],
    imputed: &[Vec<f64>],
    mask: &Mask,
    tau: f64,
) -> Result<MetricReport> {
    if truth.len() != mask.n_records() || imputed.len() != mask.n_records() {
        return Err(Error::shape("matrix and mask record counts differ"));
    }
    let mut t_cells = Vec::new();
    let mut i_cells = Vec::new();
    let mut by_feature: Vec<(usize, f64)> = vec![(0, 0.0); mask.n_features()];
    for (r, (t_row, i_row)) in truth.iter().zip(imputed).enumerate() {
        if t_row.len() != mask.n_features() || i_row.len() != mask.n_features() {
            return Err(Error::shape(format!("record {r} does not match mask width")));
        }
        for j in 0..mask.n_features() {
            if mask.is_missing(r, j) {
                t_cells.push(t_row[j]);
                i_cells.push(i_row[j]);
                by_feature[j].0 += 1;
                by_feature[j].1 += (t_row[j] - i_row[j]) * (t_row[j] - i_row[j]);
            }
        }
    }
    let mut report = score(&t_cells, &i_cells, tau)?;
    report.per_feature = by_feature
        .into_iter()
        .enumerate()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(feature, (n, sq_sum))| {
            let mse = sq_sum / n as f64;
            FeatureScore {
                feature,
                n,
                mse,
                rmse: mse.sqrt(),
            }
        })
        .collect();
    Ok(report)
}

/// Sample Pearson correlation, `None` when undefined (constant input).
fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return None;
    }
    Some((cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

/// Fills each missing cell with the observed mean of its feature column.
pub fn mean_impute(data: &[Vec<f64>], mask: &Mask) -> Result<Vec<Vec<f64>>> {
    check_shape(data, mask)?;
    let d = mask.n_features();
    let mut sums = vec![0.0; d];
    let mut counts = vec![0usize; d];
    for (r, row) in data.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !mask.is_missing(r, j) {
                sums[j] += v;
                counts[j] += 1;
            }
        }
    }
    let mut means = vec![0.0; d];
    for j in 0..d {
        if counts[j] == 0 {
            // Only a problem if something in this column needs filling.
            if (0..data.len()).any(|r| mask.is_missing(r, j)) {
                return Err(Error::DegenerateColumn(j));
            }
        } else {
            means[j] = sums[j] / counts[j] as f64;
        }
    }
    let mut completed = data.to_vec();
    for (r, row) in completed.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if mask.is_missing(r, j) {
                *v = means[j];
            }
        }
    }
    Ok(completed)
}

/// kNN imputation over shared observed coordinates.
///
/// The distance between two records is the root mean square difference over
/// coordinates observed in both (`sqrt(sum/d_shared)`); records sharing no
/// coordinate are infinitely far. Each missing cell becomes the unweighted
/// mean of that cell's value among the `k` nearest records observing it, ties
/// broken by lower record index.
pub fn knn_impute(data: &[Vec<f64>], mask: &Mask, k: usize) -> Result<Vec<Vec<f64>>> {
    check_shape(data, mask)?;
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    let n = data.len();
    let d = mask.n_features();
    let mut completed = data.to_vec();
    for r in 0..n {
        let needed: Vec<usize> = (0..d).filter(|&j| mask.is_missing(r, j)).collect();
        if needed.is_empty() {
            continue;
        }
        // Distances from r to every other record, by shared observed cells.
        let mut neighbors: Vec<(f64, usize)> = (0..n)
            .filter(|&s| s != r)
            .map(|s| (shared_distance(&data[r], &data[s], mask.row(r), mask.row(s)), s))
            .collect();
        neighbors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &j in &needed {
            let donors: Vec<usize> = neighbors
                .iter()
                .filter(|(_, s)| !mask.is_missing(*s, j))
                .take(k)
                .map(|&(_, s)| s)
                .collect();
            if donors.len() < k {
                return Err(Error::InsufficientDonors {
                    feature: j,
                    needed: k,
                    available: donors.len(),
                });
            }
            completed[r][j] = donors.iter().map(|&s| data[s][j]).sum::<f64>() / k as f64;
        }
    }
    Ok(completed)
}

fn shared_distance(a: &[f64], b: &[f64], mask_a: &[bool], mask_b: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for j in 0..a.len() {
        if !mask_a[j] && !mask_b[j] {
            sum += (a[j] - b[j]) * (a[j] - b[j]);
            shared += 1;
        }
    }
    if shared == 0 {
        f64::INFINITY
    } else {
        (sum / shared as f64).sqrt()
    }
}

fn check_shape(data: &[Vec<f64>], mask: &Mask) -> Result<()> {
    if data.len() != mask.n_records() {
        return Err(Error::shape(format!(
            "data has {} records, mask has {}",
            data.len(),
            mask.n_records()
        )));
    }
    for (r, row) in data.iter().enumerate() {
        if row.len() != mask.n_features() {
            return Err(Error::shape(format!("record {r} does not match mask width")));
        }
    }
    Ok(())
}
