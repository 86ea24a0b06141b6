use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{backward, check_prepared, forward_prepared, loss, Dims, GcnModel, Gradients, PreparedGraph};
use super::GcnError;
use crate::featurize::GraphSample;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    pub hidden: usize,
    pub layers: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            learning_rate: adam.learning_rate,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            hidden: 32,
            layers: 3,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.beta1, beta2: self.beta2, epsilon: self.epsilon }
    }

    pub fn validate(&self) -> Result<(), GcnError> {
        let bad = |msg: &str| Err(GcnError::InvalidConfig(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.hidden == 0 || self.layers == 0 {
            return bad("hidden width and layer count must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// Mean loss over the epoch's mini-batch passes.
    pub train_loss: f64,
    /// Accuracy of the predictions made during the epoch's passes.
    pub train_accuracy: f64,
    /// Accuracy on the held-out set after the epoch.
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

pub fn prepare_all<T: Scalar>(samples: &[GraphSample<T>]) -> Vec<PreparedGraph<T>> {
    samples.iter().map(PreparedGraph::new).collect()
}

/// Fraction of graphs whose argmax prediction matches the label.
pub fn accuracy<T: Scalar>(model: &GcnModel<T>, graphs: &[PreparedGraph<T>]) -> f64 {
    if graphs.is_empty() {
        return 0.0;
    }
    let correct = graphs.iter().filter(|g| forward_prepared(model, g).predicted() == g.label).count();
    correct as f64 / graphs.len() as f64
}

pub fn mean_loss<T: Scalar>(model: &GcnModel<T>, graphs: &[PreparedGraph<T>]) -> f64 {
    let total: f64 = graphs.iter().map(|g| loss(&forward_prepared(model, g).probs, g.label).to_f64_lossy()).sum();
    total / graphs.len().max(1) as f64
}

fn infer_dims<T: Scalar>(train: &[GraphSample<T>], test: &[GraphSample<T>], config: &TrainConfig) -> Result<Dims, GcnError> {
    let first = train.first().ok_or(GcnError::EmptyDataset)?;
    let d_in = first.feature_dim();
    for s in train.iter().chain(test) {
        if s.feature_dim() != d_in {
            return Err(GcnError::DimensionMismatch { expected: d_in, found: s.feature_dim() });
        }
        if s.node_count() == 0 {
            return Err(GcnError::EmptyGraph);
        }
    }
    let classes = train.iter().chain(test).map(|s| s.label).max().unwrap_or(0) + 1;
    Ok(Dims { d_in, hidden: config.hidden, layers: config.layers, classes })
}

/// Trains a freshly initialized model. The class count is one more than the
/// largest label in either set.
pub fn train<T: Scalar>(
    train: &[GraphSample<T>],
    test: &[GraphSample<T>],
    model_init_seed: u64,
    config: &TrainConfig,
) -> Result<(GcnModel<T>, TrainHistory), GcnError> {
    config.validate()?;
    let dims = infer_dims(train, test, config)?;
    let model = GcnModel::glorot(dims, model_init_seed);
    train_model(model, train, test, config)
}

/// Continues training `model` from its current parameters.
pub fn train_model<T: Scalar>(
    mut model: GcnModel<T>,
    train: &[GraphSample<T>],
    test: &[GraphSample<T>],
    config: &TrainConfig,
) -> Result<(GcnModel<T>, TrainHistory), GcnError> {
    config.validate()?;
    if train.is_empty() {
        return Err(GcnError::EmptyDataset);
    }
    let train_graphs = prepare_all(train);
    let test_graphs = prepare_all(test);
    for g in train_graphs.iter().chain(&test_graphs) {
        check_prepared(&model, g)?;
        if g.label >= model.dims.classes {
            return Err(GcnError::LabelOutOfRange { label: g.label, classes: model.dims.classes });
        }
    }

    let adam = config.adam();
    let mut state = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_graphs.len()).collect();
    let mut history = TrainHistory::default();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_like(&model);
            for &i in batch {
                let g = &train_graphs[i];
                let pass = forward_prepared(&model, g);
                loss_sum += loss(&pass.probs, g.label).to_f64_lossy();
                correct += usize::from(pass.predicted() == g.label);
                grads.add_assign(&backward(&model, g, &pass, g.label));
            }
            grads.scale(T::one() / T::of(batch.len() as f64));
            adam_step(&mut model, &grads, &mut state, &adam);
        }
        if !model.is_finite() {
            return Err(GcnError::NonFinite);
        }
        let n = train_graphs.len() as f64;
        history.epochs.push(EpochStats {
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            test_accuracy: accuracy(&model, &test_graphs),
        });
    }
    Ok((model, history))
}
