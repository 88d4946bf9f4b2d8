//! JSON checkpoint: model dimensions, optional training config and named
//! tensors with shapes.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::{Model, ModelConfig};
use super::train::TrainConfig;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFile {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u32,
    model: ModelConfig,
    train: Option<TrainConfig>,
    tensors: Vec<TensorFile>,
}

pub fn checkpoint_to_json(model: &Model, train: Option<&TrainConfig>) -> String {
    let tensors = model
        .params
        .names()
        .iter()
        .zip(model.params.tensors())
        .map(|(name, t)| TensorFile {
            name: name.clone(),
            shape: [t.nrows(), t.ncols()],
            data: t.as_standard_layout().iter().copied().collect(),
        })
        .collect();
    let file = CheckpointFile { format_version: CHECKPOINT_VERSION, model: model.cfg.clone(), train: train.cloned(), tensors };
    serde_json::to_string(&file).expect("checkpoint serializes")
}

/// Parses a checkpoint and checks every tensor against the layout implied
/// by its model dimensions.
pub fn checkpoint_from_json(s: &str) -> Result<(Model, Option<TrainConfig>)> {
    let file: CheckpointFile = serde_json::from_str(s)?;
    if file.format_version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format_version {}", file.format_version)));
    }
    let mut model = Model::init(file.model.clone(), 0).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if file.tensors.len() != model.params.len() {
        return Err(Error::Checkpoint(format!("expected {} tensors, found {}", model.params.len(), file.tensors.len())));
    }
    for (k, t) in file.tensors.into_iter().enumerate() {
        let name = &model.params.names()[k];
        if &t.name != name {
            return Err(Error::Checkpoint(format!("tensor {k} is `{}`, expected `{name}`", t.name)));
        }
        let want = model.params.tensors()[k].dim();
        if (t.shape[0], t.shape[1]) != want || t.data.len() != want.0 * want.1 {
            return Err(Error::Checkpoint(format!("tensor `{name}` has shape {:?}, expected {want:?}", t.shape)));
        }
        model.params.tensors_mut()[k] = Array2::from_shape_vec(want, t.data).expect("length checked");
    }
    if !model.params.is_finite() {
        return Err(Error::Checkpoint("checkpoint contains non-finite values".into()));
    }
    Ok((model, file.train))
}

pub fn save_checkpoint(path: &Path, model: &Model, train: Option<&TrainConfig>) -> Result<()> {
    std::fs::write(path, checkpoint_to_json(model, train))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, Option<TrainConfig>)> {
    checkpoint_from_json(&std::fs::read_to_string(path)?)
}
