use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GcnError;
use crate::featurize::GraphSample;
use crate::scalar::Scalar;

/// Probabilities are clamped here before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub d_in: usize,
    pub hidden: usize,
    pub layers: usize,
    pub classes: usize,
}

impl Dims {
    /// Input and output width of graph layer `l`.
    pub fn layer_shape(&self, l: usize) -> (usize, usize) {
        (if l == 0 { self.d_in } else { self.hidden }, self.hidden)
    }
}

/// Graph convolution stack, mean readout and a linear scoring layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel<T> {
    pub thetas: Vec<Array2<T>>,
    /// hidden x classes
    pub fc_weights: Array2<T>,
    pub fc_bias: Array1<T>,
    pub dims: Dims,
}

impl<T: Scalar> GcnModel<T> {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            thetas: (0..dims.layers).map(|l| Array2::zeros(dims.layer_shape(l))).collect(),
            fc_weights: Array2::zeros((dims.hidden, dims.classes)),
            fc_bias: Array1::zeros(dims.classes),
            dims,
        }
    }

    /// Glorot-uniform weights drawn from a seeded stream, zero bias.
    pub fn glorot(dims: Dims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |(rows, cols): (usize, usize)| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || T::of(rng.gen_range(-limit..limit)))
        };
        let thetas = (0..dims.layers).map(|l| init(dims.layer_shape(l))).collect();
        let fc_weights = init((dims.hidden, dims.classes));
        Self { thetas, fc_weights, fc_bias: Array1::zeros(dims.classes), dims }
    }

    pub fn is_finite(&self) -> bool {
        self.thetas.iter().all(|t| t.iter().all(|v| v.is_finite()))
            && self.fc_weights.iter().all(|v| v.is_finite())
            && self.fc_bias.iter().all(|v| v.is_finite())
    }

    pub fn parameter_count(&self) -> usize {
        self.thetas.iter().map(|t| t.len()).sum::<usize>() + self.fc_weights.len() + self.fc_bias.len()
    }

    pub fn cast<U: Scalar>(&self) -> GcnModel<U> {
        let c2 = |a: &Array2<T>| a.mapv(|v| U::of(v.to_f64_lossy()));
        GcnModel {
            thetas: self.thetas.iter().map(c2).collect(),
            fc_weights: c2(&self.fc_weights),
            fc_bias: self.fc_bias.mapv(|v| U::of(v.to_f64_lossy())),
            dims: self.dims,
        }
    }
}

/// Gradients with the same layout as [`GcnModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub thetas: Vec<Array2<T>>,
    pub fc_weights: Array2<T>,
    pub fc_bias: Array1<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(model: &GcnModel<T>) -> Self {
        let z = GcnModel::<T>::zeros(model.dims);
        Self { thetas: z.thetas, fc_weights: z.fc_weights, fc_bias: z.fc_bias }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.thetas.iter_mut().zip(&other.thetas) {
            *a += b;
        }
        self.fc_weights += &other.fc_weights;
        self.fc_bias += &other.fc_bias;
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.thetas {
            a.mapv_inplace(|v| v * s);
        }
        self.fc_weights.mapv_inplace(|v| v * s);
        self.fc_bias.mapv_inplace(|v| v * s);
    }

    pub fn max_abs(&self) -> T {
        self.thetas
            .iter()
            .flat_map(|a| a.iter())
            .chain(self.fc_weights.iter())
            .chain(self.fc_bias.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `D^-1/2 (A + I) D^-1/2` with `D` the weighted degree of `A + I`.
pub fn normalize_adjacency<T: Scalar>(a: &Array2<T>) -> Array2<T> {
    let n = a.nrows();
    let mut hat = a.to_owned();
    for i in 0..n {
        hat[[i, i]] += T::one();
    }
    let inv_sqrt: Array1<T> = hat.sum_axis(Axis(1)).mapv(|d| T::one() / d.sqrt());
    Zip::indexed(&mut hat).for_each(|(i, j), v| *v = *v * inv_sqrt[i] * inv_sqrt[j]);
    hat
}

pub fn softmax<T: Scalar>(logits: &Array1<T>) -> Array1<T> {
    let max = logits.fold(T::neg_infinity(), |m, &v| m.max(v));
    let exp = logits.mapv(|v| (v - max).exp());
    let sum = exp.sum();
    exp / sum
}

/// Cross-entropy of a probability vector against an integer label.
pub fn loss<T: Scalar>(probs: &Array1<T>, label: usize) -> T {
    -probs[label].max(T::of(PROB_FLOOR)).ln()
}

/// Graph with its propagation operator precomputed.
#[derive(Debug, Clone)]
pub struct PreparedGraph<T> {
    pub a_norm: Array2<T>,
    pub x: Array2<T>,
    pub label: usize,
}

impl<T: Scalar> PreparedGraph<T> {
    pub fn new(sample: &GraphSample<T>) -> Self {
        Self { a_norm: normalize_adjacency(&sample.adjacency), x: sample.x.clone(), label: sample.label }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    /// Node states `X^0 .. X^L`.
    pub hidden: Vec<Array2<T>>,
    /// `Â X^l` for each layer, kept for the weight gradients.
    pub propagated: Vec<Array2<T>>,
    pub readout: Array1<T>,
    pub logits: Array1<T>,
    pub probs: Array1<T>,
}

impl<T: Scalar> ForwardPass<T> {
    pub fn predicted(&self) -> usize {
        argmax(&self.probs)
    }
}

pub fn argmax<T: Scalar>(v: &Array1<T>) -> usize {
    v.iter().enumerate().fold((0, T::neg_infinity()), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) }).0
}

fn check_dims<T: Scalar>(model: &GcnModel<T>, x: &Array2<T>, a: &Array2<T>) -> Result<(), GcnError> {
    if x.ncols() != model.dims.d_in {
        return Err(GcnError::DimensionMismatch { expected: model.dims.d_in, found: x.ncols() });
    }
    if a.dim() != (x.nrows(), x.nrows()) {
        return Err(GcnError::DimensionMismatch { expected: x.nrows(), found: a.nrows() });
    }
    if x.nrows() == 0 {
        return Err(GcnError::EmptyGraph);
    }
    Ok(())
}

pub fn forward<T: Scalar>(model: &GcnModel<T>, sample: &GraphSample<T>) -> Result<ForwardPass<T>, GcnError> {
    check_dims(model, &sample.x, &sample.adjacency)?;
    Ok(forward_prepared(model, &PreparedGraph::new(sample)))
}

pub fn check_prepared<T: Scalar>(model: &GcnModel<T>, g: &PreparedGraph<T>) -> Result<(), GcnError> {
    check_dims(model, &g.x, &g.a_norm)
}

/// Forward pass on a prepared graph. Dimensions must already match.
pub fn forward_prepared<T: Scalar>(model: &GcnModel<T>, g: &PreparedGraph<T>) -> ForwardPass<T> {
    let mut hidden = Vec::with_capacity(model.thetas.len() + 1);
    let mut propagated = Vec::with_capacity(model.thetas.len());
    hidden.push(g.x.clone());
    for theta in &model.thetas {
        let p = g.a_norm.dot(hidden.last().expect("input state present"));
        let mut h = p.dot(theta);
        h.mapv_inplace(T::tanh);
        propagated.push(p);
        hidden.push(h);
    }
    let readout = hidden.last().expect("at least the input state").mean_axis(Axis(0)).expect("non-empty graph");
    let logits = readout.dot(&model.fc_weights) + &model.fc_bias;
    let probs = softmax(&logits);
    ForwardPass { hidden, propagated, readout, logits, probs }
}

/// Exact gradients of `loss(forward(..).probs, label)` for one graph.
pub fn backward<T: Scalar>(model: &GcnModel<T>, g: &PreparedGraph<T>, pass: &ForwardPass<T>, label: usize) -> Gradients<T> {
    let mut g_logits = pass.probs.clone();
    g_logits[label] -= T::one();

    let fc_weights = pass.readout.view().insert_axis(Axis(1)).dot(&g_logits.view().insert_axis(Axis(0)));
    let g_readout = model.fc_weights.dot(&g_logits);

    let n = g.x.nrows();
    let inv_n = T::one() / T::of(n as f64);
    let mut g_h = Array2::from_shape_fn((n, model.dims.hidden), |(_, j)| g_readout[j] * inv_n);

    let layers = model.thetas.len();
    let mut thetas = vec![Array2::zeros((0, 0)); layers];
    for l in (0..layers).rev() {
        // through tanh: dZ = dH * (1 - H^2)
        Zip::from(&mut g_h).and(&pass.hidden[l + 1]).for_each(|d, &h| *d *= T::one() - h * h);
        thetas[l] = pass.propagated[l].t().dot(&g_h);
        if l > 0 {
            // Â is symmetric
            g_h = g.a_norm.dot(&g_h.dot(&model.thetas[l].t()));
        }
    }
    Gradients { thetas, fc_weights, fc_bias: g_logits }
}
