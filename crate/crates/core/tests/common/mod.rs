#![allow(dead_code)]

pub mod gradcheck;
pub mod oracle;

use circuit_graph::netlist::{Circuit, Element, ElementKind, Mode};
use circuit_graph::GraphSample;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random symmetric weighted graph with zero diagonal and features in [-1, 1].
pub fn random_sample(rng: &mut ChaCha8Rng, nodes: usize, d_in: usize, classes: usize) -> GraphSample<f64> {
    let x = Array2::from_shape_simple_fn((nodes, d_in), || rng.gen_range(-1.0..1.0));
    let mut adjacency = Array2::zeros((nodes, nodes));
    for i in 0..nodes {
        for j in i + 1..nodes {
            if rng.gen_bool(0.4) {
                let w = rng.gen_range(0.0..1.0);
                adjacency[[i, j]] = w;
                adjacency[[j, i]] = w;
            }
        }
    }
    GraphSample { x, adjacency, label: rng.gen_range(0..classes) }
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Random connected continuous circuit: a source from net 1 to ground, a
/// random spanning tree of passive elements over nets `0..=k`, plus a few
/// extra passive elements between distinct nets.
pub fn random_continuous_circuit(rng: &mut ChaCha8Rng) -> Circuit {
    let k = rng.gen_range(1..=5);
    let mut elements = Vec::new();
    let mut counter = 0;
    let mut push = |elements: &mut Vec<Element>, kind: ElementKind, a: usize, b: usize, rng: &mut ChaCha8Rng| {
        counter += 1;
        let value = log_uniform(rng, 1e-9, 1e3);
        elements.push(Element::new(format!("{}{counter}", kind.prefix()), kind, a.to_string(), b.to_string(), value));
    };
    let source = if rng.gen_bool(0.5) { ElementKind::VoltageSource } else { ElementKind::CurrentSource };
    push(&mut elements, source, 1, 0, rng);
    let passive = [ElementKind::Resistor, ElementKind::Inductor, ElementKind::Capacitor];
    for net in 1..=k {
        let other = rng.gen_range(0..net);
        let kind = *passive.choose(rng).unwrap();
        push(&mut elements, kind, net, other, rng);
    }
    for _ in 0..rng.gen_range(0..=3) {
        let a = rng.gen_range(0..=k);
        let b = (a + rng.gen_range(1..=k)) % (k + 1);
        let kind = *passive.choose(rng).unwrap();
        push(&mut elements, kind, a, b, rng);
    }
    elements.shuffle(rng);
    Circuit { elements, frequency: log_uniform(rng, 1.0, 1e6), mode: Mode::Continuous, class_label: Some(0) }
}
