//! Graph convolutional classifier written directly against `ndarray`.
//!
//! Each layer computes `tanh(Â X Θ)` with `Â` the symmetrically normalized
//! adjacency with self-loops. Node states of the last layer are averaged into
//! a graph vector, scored by a linear layer and passed through softmax.
//! Gradients are derived by hand and checked against finite differences in
//! the test suite.

mod adam;
mod model;
mod train;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use model::{
    argmax, backward, check_prepared, forward, forward_prepared, loss, normalize_adjacency, softmax, Dims, ForwardPass, GcnModel,
    Gradients, PreparedGraph, PROB_FLOOR,
};
pub use train::{accuracy, mean_loss, prepare_all, train, train_model, EpochStats, TrainConfig, TrainHistory};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GcnError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("no training samples")]
    EmptyDataset,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("parameters became non-finite during training")]
    NonFinite,
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
}

/// On-disk model: dimensions plus row-major flattened parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub dims: Dims,
    pub thetas: Vec<Vec<f64>>,
    pub fc_weights: Vec<f64>,
    pub fc_bias: Vec<f64>,
    pub seed: u64,
    pub feature_config_fingerprint: String,
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(model: &GcnModel<T>, seed: u64, feature_config_fingerprint: impl Into<String>) -> Self {
        let flat = |a: &Array2<T>| a.iter().map(|v| v.to_f64_lossy()).collect();
        Self {
            dims: model.dims,
            thetas: model.thetas.iter().map(flat).collect(),
            fc_weights: flat(&model.fc_weights),
            fc_bias: model.fc_bias.iter().map(|v| v.to_f64_lossy()).collect(),
            seed,
            feature_config_fingerprint: feature_config_fingerprint.into(),
        }
    }

    pub fn to_model<T: Scalar>(&self) -> Result<GcnModel<T>, GcnError> {
        let dims = self.dims;
        let matrix = |shape: (usize, usize), data: &[f64], what: &str| {
            Array2::from_shape_vec(shape, data.iter().map(|&v| T::of(v)).collect())
                .map_err(|e| GcnError::Checkpoint(format!("{what}: {e}")))
        };
        if self.thetas.len() != dims.layers {
            return Err(GcnError::Checkpoint(format!("{} layer matrices for {} layers", self.thetas.len(), dims.layers)));
        }
        let thetas = self
            .thetas
            .iter()
            .enumerate()
            .map(|(l, t)| matrix(dims.layer_shape(l), t, &format!("layer {l}")))
            .collect::<Result<Vec<_>, _>>()?;
        let fc_weights = matrix((dims.hidden, dims.classes), &self.fc_weights, "fc_weights")?;
        if self.fc_bias.len() != dims.classes {
            return Err(GcnError::Checkpoint(format!("fc_bias has {} entries for {} classes", self.fc_bias.len(), dims.classes)));
        }
        let fc_bias = Array1::from_iter(self.fc_bias.iter().map(|&v| T::of(v)));
        let model = GcnModel { thetas, fc_weights, fc_bias, dims };
        if !model.is_finite() {
            return Err(GcnError::Checkpoint("non-finite parameter".into()));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip() {
        let m = GcnModel::<f64>::glorot(Dims { d_in: 10, hidden: 6, layers: 3, classes: 4 }, 21);
        let ck = Checkpoint::from_model(&m, 21, "abc");
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_model::<f64>().unwrap(), m);
        assert_eq!(ck.thetas[1][1], m.thetas[1][[0, 1]]);
    }

    #[test]
    fn checkpoint_shape_errors() {
        let m = GcnModel::<f64>::zeros(Dims { d_in: 2, hidden: 2, layers: 2, classes: 2 });
        let mut ck = Checkpoint::from_model(&m, 0, "");
        ck.fc_bias.pop();
        assert!(matches!(ck.to_model::<f64>(), Err(GcnError::Checkpoint(_))));
        let mut ck = Checkpoint::from_model(&m, 0, "");
        ck.thetas.pop();
        assert!(matches!(ck.to_model::<f64>(), Err(GcnError::Checkpoint(_))));
    }
}
