use circuit_graph::gcn::{backward, forward, loss, GcnModel, PreparedGraph};
use circuit_graph::GraphSample;

pub const STEP: f64 = 1e-5;
pub const MAX_RELATIVE_ERROR: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely against it.
pub const MAGNITUDE_FLOOR: f64 = 1e-7;

fn loss_at(model: &GcnModel<f64>, sample: &GraphSample<f64>) -> f64 {
    loss(&forward(model, sample).unwrap().probs, sample.label)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

fn central_difference(
    model: &mut GcnModel<f64>,
    sample: &GraphSample<f64>,
    param: impl Fn(&mut GcnModel<f64>) -> &mut f64,
) -> f64 {
    let original = *param(model);
    *param(model) = original + STEP;
    let plus = loss_at(model, sample);
    *param(model) = original - STEP;
    let minus = loss_at(model, sample);
    *param(model) = original;
    (plus - minus) / (2.0 * STEP)
}

/// Compares every analytic gradient entry against a central difference and
/// returns the number of entries checked and the worst relative error.
pub fn check(model: &mut GcnModel<f64>, sample: &GraphSample<f64>) -> (usize, f64) {
    let pass = forward(model, sample).unwrap();
    let grads = backward(model, &PreparedGraph::new(sample), &pass, sample.label);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut record = |analytic: f64, numeric: f64| {
        worst = worst.max(relative_error(analytic, numeric));
        checked += 1;
    };
    for l in 0..model.thetas.len() {
        let (rows, cols) = model.thetas[l].dim();
        for i in 0..rows {
            for j in 0..cols {
                let n = central_difference(model, sample, |m| &mut m.thetas[l][[i, j]]);
                record(grads.thetas[l][[i, j]], n);
            }
        }
    }
    let (rows, cols) = model.fc_weights.dim();
    for i in 0..rows {
        for j in 0..cols {
            let n = central_difference(model, sample, |m| &mut m.fc_weights[[i, j]]);
            record(grads.fc_weights[[i, j]], n);
        }
    }
    for c in 0..model.fc_bias.len() {
        let n = central_difference(model, sample, |m| &mut m.fc_bias[c]);
        record(grads.fc_bias[c], n);
    }
    (checked, worst)
}
