//! Model persistence: a JSON document holding the network parameters,
//! normalization statistics, and the final training loss.
//!
//! Floats serialize with shortest round-trip decimal formatting, so
//! `load(save(model))` reproduces every parameter bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::net::{ActivationKind, LayerParams, NetworkParams};

pub const FORMAT_VERSION: u32 = 1;

/// A trained network bundled with the statistics needed to apply it to raw
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: NetworkParams,
    pub norm_stats: NormStats,
    /// Final epoch-mean training loss; drives the default acceptance
    /// threshold during imputation.
    pub train_loss: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    input_dim: usize,
    tied: bool,
    layers: Vec<LayerFile>,
    norm_stats: NormStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_loss: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    activation: ActivationKind,
    /// Row-major `rows x cols`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

pub fn save_model(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        input_dim: model.params.input_dim(),
        tied: model.params.tied(),
        layers: model
            .params
            .layers()
            .iter()
            .map(|l| LayerFile {
                rows: l.rows(),
                cols: l.cols(),
                activation: l.activation(),
                weights: l.weights().to_vec(),
                biases: l.biases().to_vec(),
            })
            .collect(),
        norm_stats: model.norm_stats.clone(),
        train_loss: model.train_loss,
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::InvalidArgument(format!("could not serialize model: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{}: {e}", path.display()),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::config(format!(
            "unsupported model format_version {}",
            file.format_version
        )));
    }
    let layers = file
        .layers
        .into_iter()
        .map(|l| LayerParams::from_parts(l.rows, l.cols, l.weights, l.biases, l.activation))
        .collect::<Result<Vec<_>>>()?;
    let params = NetworkParams::from_layers(layers, file.tied)?;
    if params.input_dim() != file.input_dim {
        return Err(Error::shape(format!(
            "model file claims input_dim {}, layers give {}",
            file.input_dim,
            params.input_dim()
        )));
    }
    if file.norm_stats.n_features() != params.input_dim() {
        return Err(Error::shape(format!(
            "norm_stats cover {} features, network expects {}",
            file.norm_stats.n_features(),
            params.input_dim()
        )));
    }
    Ok(SavedModel {
        params,
        norm_stats: file.norm_stats,
        train_loss: file.train_loss,
    })
}
