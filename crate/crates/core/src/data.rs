//! CSV ingestion, the missing-value convention, and min-max normalization.
//!
//! CSV files carry a header row; cells are decimal numbers, `?`, or empty.
//! Both `?` and the empty string parse as missing (NaN in memory); missing
//! cells are written back as `?`. Values print with Rust's shortest
//! round-trip formatting, so save/load reproduces them bit-exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::missingness::Mask;

/// An in-memory table: named feature columns over real-valued records.
/// Missing cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn n_records(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Missing-cell indicator derived from the NaN convention.
    pub fn missing_mask(&self) -> Mask {
        Mask::new(
            self.values
                .iter()
                .map(|row| row.iter().map(|v| v.is_nan()).collect())
                .collect(),
        )
        .expect("dataset rows are rectangular")
    }

    pub fn n_missing(&self) -> usize {
        self.values
            .iter()
            .map(|r| r.iter().filter(|v| v.is_nan()).count())
            .sum()
    }

    pub fn is_complete(&self) -> bool {
        self.n_missing() == 0
    }

    /// Indices of records without any missing cell.
    pub fn complete_record_indices(&self) -> Vec<usize> {
        (0..self.n_records())
            .filter(|&r| self.values[r].iter().all(|v| !v.is_nan()))
            .collect()
    }
}

/// Reads a CSV file with a header row. `?` and empty cells are missing;
/// ragged rows and non-numeric cells are parse errors carrying a 1-based
/// file location.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?;
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("{}: empty file or missing header", path.display()),
        });
    }
    let feature_names: Vec<String> = headers.iter().map(str::to_owned).collect();

    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(values.len() + 2);
        let mut row = Vec::with_capacity(feature_names.len());
        for (c, cell) in record.iter().enumerate() {
            row.push(parse_cell(cell, line, c + 1)?);
        }
        values.push(row);
    }
    Ok(Dataset {
        feature_names,
        values,
    })
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    if cell.is_empty() || cell == "?" {
        return Ok(f64::NAN);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            column,
            message: format!("expected a number, `?`, or empty cell, got `{cell}`"),
        }),
    }
}

fn csv_error(err: csv::Error) -> Error {
    let (line, column) = match err.kind() {
        csv::ErrorKind::UnequalLengths { pos, .. } => {
            (pos.as_ref().map(|p| p.line() as usize).unwrap_or(0), 1)
        }
        _ => (0, 0),
    };
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            column,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes a dataset back to CSV; NaN cells become `?`.
pub fn save_csv(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
    writer
        .write_record(&dataset.feature_names)
        .map_err(csv_error)?;
    for row in &dataset.values {
        let cells: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { "?".into() } else { v.to_string() })
            .collect();
        writer.write_record(&cells).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a mask sidecar: same header, cells are 0 (observed) or 1 (missing).
pub fn save_mask_csv(path: impl AsRef<Path>, mask: &Mask, feature_names: &[String]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
    writer.write_record(feature_names).map_err(csv_error)?;
    for row in mask.rows() {
        let cells: Vec<&str> = row.iter().map(|&m| if m { "1" } else { "0" }).collect();
        writer.write_record(&cells).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a mask sidecar written by [`save_mask_csv`].
pub fn load_mask_csv(path: impl AsRef<Path>) -> Result<Mask> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        let mut row = Vec::with_capacity(record.len());
        for (c, cell) in record.iter().enumerate() {
            match cell {
                "0" => row.push(false),
                "1" => row.push(true),
                other => {
                    return Err(Error::Parse {
                        line,
                        column: c + 1,
                        message: format!("mask cells must be 0 or 1, got `{other}`"),
                    })
                }
            }
        }
        rows.push(row);
    }
    Mask::new(rows)
}

/// Per-feature min-max statistics mapping observed values into `[0, 1]`.
/// Constant columns normalize to 0.5 and denormalize back to the constant.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormStats {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormStats {
    /// Fits on the observed (non-NaN) cells of `rows`. Errors when a column
    /// has nothing observed.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_nan() {
                    mins[j] = mins[j].min(v);
                    maxs[j] = maxs[j].max(v);
                }
            }
        }
        for j in 0..d {
            if mins[j] > maxs[j] {
                return Err(Error::DegenerateColumn(j));
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn normalize_value(&self, feature: usize, v: f64) -> f64 {
        let span = self.maxs[feature] - self.mins[feature];
        if span > 0.0 {
            (v - self.mins[feature]) / span
        } else {
            0.5
        }
    }

    pub fn denormalize_value(&self, feature: usize, v: f64) -> f64 {
        let span = self.maxs[feature] - self.mins[feature];
        if span > 0.0 {
            self.mins[feature] + v * span
        } else {
            self.mins[feature]
        }
    }

    /// Normalizes every observed cell, preserving NaN. With `clamp`, results
    /// are clipped into `[0, 1]` (values beyond the fitted range otherwise
    /// escape the unit interval).
    pub fn normalize_rows(&self, rows: &[Vec<f64>], clamp: bool) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if v.is_nan() {
                            v
                        } else {
                            let n = self.normalize_value(j, v);
                            if clamp {
                                n.clamp(0.0, 1.0)
                            } else {
                                n
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn denormalize_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if v.is_nan() {
                            v
                        } else {
                            self.denormalize_value(j, v)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
