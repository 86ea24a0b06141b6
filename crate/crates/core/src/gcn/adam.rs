use ndarray::{Array, Dimension, Zip};
use serde::{Deserialize, Serialize};

use super::model::{GcnModel, Gradients};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 0.02, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub t: u64,
    pub m: Gradients<T>,
    pub v: Gradients<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &GcnModel<T>) -> Self {
        Self { t: 0, m: Gradients::zeros_like(model), v: Gradients::zeros_like(model) }
    }
}

struct Coefficients<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    correction1: T,
    correction2: T,
}

fn update<T: Scalar, D: Dimension>(
    param: &mut Array<T, D>,
    grad: &Array<T, D>,
    m: &mut Array<T, D>,
    v: &mut Array<T, D>,
    c: &Coefficients<T>,
) {
    let one = T::one();
    Zip::from(param).and(grad).and(m).and(v).for_each(|p, &g, m, v| {
        *m = c.beta1 * *m + (one - c.beta1) * g;
        *v = c.beta2 * *v + (one - c.beta2) * g * g;
        let m_hat = *m / c.correction1;
        let v_hat = *v / c.correction2;
        *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
    });
}

/// One bias-corrected Adam update of every model parameter.
pub fn adam_step<T: Scalar>(model: &mut GcnModel<T>, grads: &Gradients<T>, state: &mut AdamState<T>, config: &AdamConfig) {
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let c = Coefficients {
        lr: T::of(config.learning_rate),
        beta1: T::of(config.beta1),
        beta2: T::of(config.beta2),
        eps: T::of(config.epsilon),
        correction1: T::one() - T::of(config.beta1).powi(t),
        correction2: T::one() - T::of(config.beta2).powi(t),
    };
    for l in 0..model.thetas.len() {
        update(&mut model.thetas[l], &grads.thetas[l], &mut state.m.thetas[l], &mut state.v.thetas[l], &c);
    }
    update(&mut model.fc_weights, &grads.fc_weights, &mut state.m.fc_weights, &mut state.v.fc_weights, &c);
    update(&mut model.fc_bias, &grads.fc_bias, &mut state.m.fc_bias, &mut state.v.fc_bias, &c);
}
