use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

pub const PCA_TOLERANCE: f64 = 1e-9;
pub const PCA_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub points: Vec<(f64, f64)>,
    /// Variance captured by each of the two components.
    pub variances: [f64; 2],
    pub degenerate: bool,
}

fn sign_normalized(mut v: Array1<f64>) -> Array1<f64> {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.mapv_inplace(|x| -x);
        }
    }
    v
}

/// Dominant eigenpair of a symmetric positive semi-definite matrix.
fn power_iteration(c: &Array2<f64>) -> Option<(f64, Array1<f64>)> {
    let start = (0..c.nrows()).max_by(|&a, &b| c[[a, a]].total_cmp(&c[[b, b]]).then(b.cmp(&a)))?;
    let mut v = c.column(start).to_owned();
    let norm = v.dot(&v).sqrt();
    if norm == 0.0 {
        return None;
    }
    v /= norm;
    for _ in 0..PCA_MAX_ITERATIONS {
        let mut next = c.dot(&v);
        let n = next.dot(&next).sqrt();
        if n == 0.0 {
            return None;
        }
        next /= n;
        let delta = (&next - &v).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v = next;
        if delta < PCA_TOLERANCE {
            break;
        }
    }
    let lambda = v.dot(&c.dot(&v));
    Some((lambda, sign_normalized(v)))
}

/// Top two principal directions of the rows of `data` (already centered),
/// with their variances. Missing directions are returned as zero vectors.
pub fn principal_components(centered: &Array2<f64>) -> [(f64, Array1<f64>); 2] {
    let n = centered.nrows().max(1) as f64;
    let d = centered.ncols();
    let mut cov = centered.t().dot(centered) / n;
    let zero = || (0.0, Array1::zeros(d));
    let Some((l1, v1)) = power_iteration(&cov) else {
        return [zero(), zero()];
    };
    let outer = v1.view().insert_axis(Axis(1)).dot(&v1.view().insert_axis(Axis(0)));
    cov.scaled_add(-l1, &outer);
    let second = match power_iteration(&cov) {
        Some((l2, v2)) if l2 > l1 * 1e-12 => (l2, v2),
        _ => zero(),
    };
    [(l1, v1), second]
}

/// Centers the readout vectors and projects them onto their top two
/// principal components.
pub fn embed_2d(readouts: &[Vec<f64>]) -> Embedding {
    let n = readouts.len();
    let d = readouts.first().map_or(0, Vec::len);
    let origin = || Embedding { points: vec![(0.0, 0.0); n], variances: [0.0, 0.0], degenerate: true };
    if n == 0 || d == 0 {
        return origin();
    }
    let data = Array2::from_shape_fn((n, d), |(i, j)| readouts[i][j]);
    let mean = data.mean_axis(Axis(0)).expect("non-empty");
    let centered = &data - &mean;
    let scale = data.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if centered.iter().all(|x| x.abs() <= 1e-12 * scale) {
        return origin();
    }
    let [(l1, v1), (l2, v2)] = principal_components(&centered);
    let xs = centered.dot(&v1);
    let ys = centered.dot(&v2);
    Embedding { points: xs.iter().copied().zip(ys.iter().copied()).collect(), variances: [l1, l2], degenerate: false }
}
