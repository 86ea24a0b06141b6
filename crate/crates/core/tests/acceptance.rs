//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the criteria execute one after another
//! and the timed ones are not competing with each other for cores.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use circuit_graph::bondgraph::{to_bond_graph, BgNodeKind};
use circuit_graph::datagen::{generate, generate_graphs, generate_split, switching_templates, Suite};
use circuit_graph::experiments::{experiment_set, run_experiment, ExperimentSpec};
use circuit_graph::gcn::{forward, normalize_adjacency, train, Dims, GcnModel, TrainConfig};
use circuit_graph::metrics::{evaluate, format_table, from_confusion, ConfusionMatrix};
use circuit_graph::netlist::Mode;
use common::oracle::{expected_graph, isomorphic, Labeled};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reproduction(
    suite: Suite,
    per_class: usize,
    epochs: usize,
) -> Result<(f64, circuit_graph::EvalReport, Vec<String>, Duration), String> {
    let started = Instant::now();
    let config = suite.default_feature_config();
    let (train_set, test_set) = generate_split(&suite.templates(), per_class, SEED, &config, 0.7).map_err(|e| e.to_string())?;
    let tc = TrainConfig { epochs, seed: SEED, ..TrainConfig::default() };
    let (model, history) = train(&train_set.samples, &test_set.samples, SEED, &tc).map_err(|e| e.to_string())?;
    let report = evaluate(&model, &test_set.samples).map_err(|e| e.to_string())?;
    let train_accuracy = history.last().map(|s| s.train_accuracy).unwrap_or(0.0);
    Ok((train_accuracy, report, test_set.class_names, started.elapsed()))
}

fn continuous_reproduction() -> Outcome {
    let (_, report, names, elapsed) = reproduction(Suite::Continuous, 857, 1200)?;
    print!("{}", format_table(&report, &names));
    let f1: Vec<f64> = report.per_class.iter().map(|m| m.f1).collect();
    let lowest = f1.iter().copied().fold(f64::INFINITY, f64::min);
    let pair_lowest = f1[2].min(f1[3]);
    let detail = format!(
        "test accuracy {:.4} (need >= 0.95), lowest F1 {lowest:.4}, lowest F1 on classes 2/3 {pair_lowest:.4}, {:.0} s (need < 900 s)",
        report.accuracy,
        elapsed.as_secs_f64()
    );
    check(report.accuracy >= 0.95 && pair_lowest <= lowest && elapsed < Duration::from_secs(900), detail)
}

fn switching_reproduction() -> Outcome {
    let (train_accuracy, report, names, elapsed) = reproduction(Suite::Switching, 1000, 200)?;
    print!("{}", format_table(&report, &names));
    let detail = format!(
        "train accuracy {train_accuracy:.4}, test accuracy {:.4} (need >= 0.99), {:.0} s (need < 300 s)",
        report.accuracy,
        elapsed.as_secs_f64()
    );
    check(train_accuracy >= 0.99 && report.accuracy >= 0.99 && elapsed < Duration::from_secs(300), detail)
}

fn find_spec(set: u8, label: &str) -> ExperimentSpec {
    experiment_set(set).unwrap().into_iter().find(|s| s.label == label).expect("known experiment label")
}

fn feature_experiment_direction() -> Outcome {
    let config = TrainConfig::default();
    let mut accuracy = Vec::new();
    for (set, label) in [(3, "edge=ones, 1/C"), (1, "edge=ones"), (2, "-1/C")] {
        let spec = find_spec(set, label);
        let result = run_experiment(&spec, 857, SEED, &config).map_err(|e| e.to_string())?;
        accuracy.push(result.train_accuracy);
    }
    let detail = format!(
        "final train accuracy: ones+1/C {:.4}, ones+raw C {:.4}, normalized-frequency+(-1/C) {:.4} (need first strictly greatest)",
        accuracy[0], accuracy[1], accuracy[2]
    );
    check(accuracy[0] > accuracy[1] && accuracy[0] > accuracy[2], detail)
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut entries) = (0.0f64, 0);
    for _ in 0..100 {
        let dims = Dims {
            d_in: rng.gen_range(1..=6),
            hidden: rng.gen_range(1..=6),
            layers: rng.gen_range(1..=4),
            classes: rng.gen_range(2..=5),
        };
        let mut model = GcnModel::glorot(dims, rng.gen());
        model.fc_bias.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        let nodes = rng.gen_range(1..=12);
        let sample = common::random_sample(&mut rng, nodes, dims.d_in, dims.classes);
        let (checked, w) = common::gradcheck::check(&mut model, &sample);
        worst = worst.max(w);
        entries += checked;
    }
    check(
        worst < common::gradcheck::MAX_RELATIVE_ERROR,
        format!("100 pairs, {entries} parameters, worst relative error {worst:.2e} (need < 1e-4)"),
    )
}

fn permutation_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let circuits: Vec<_> = [Suite::Continuous, Suite::Switching]
        .iter()
        .flat_map(|&s| generate(s, 20, 3, &s.default_feature_config()).unwrap().samples)
        .collect();
    let mut worst = 0.0f64;
    for pair in 0..1000 {
        let sample = if pair % 2 == 0 {
            circuits[rng.gen_range(0..circuits.len())].clone()
        } else {
            let n = rng.gen_range(1..=40);
            common::random_sample(&mut rng, n, 12, 6)
        };
        let dims = Dims { d_in: sample.feature_dim(), hidden: 32, layers: 3, classes: 7 };
        let model = GcnModel::glorot(dims, rng.gen());
        let perm = common::random_permutation(&mut rng, sample.node_count());
        let a = forward(&model, &sample).map_err(|e| e.to_string())?.logits;
        let b = forward(&model, &sample.permuted(&perm)).map_err(|e| e.to_string())?.logits;
        worst = a.iter().zip(&b).fold(worst, |m, (x, y)| m.max((x - y).abs()));
    }
    check(worst < 1e-9, format!("1000 pairs, max logit difference {worst:.2e} (need < 1e-9)"))
}

fn metrics_oracle() -> Outcome {
    let supports = [310, 247, 226, 213, 225, 289, 282];
    let mut m = ConfusionMatrix::new(7);
    for (c, &n) in supports.iter().enumerate() {
        m.counts[c][c] = n;
    }
    m.counts[2][2] = 174;
    m.counts[2][3] = 52;
    let r = from_confusion(m);
    let got = [r.per_class[3].precision, r.per_class[2].recall, r.per_class[3].f1, r.macro_avg.f1];
    let want = [0.80, 0.77, 0.89, 0.97];
    let ok = got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= 0.005);
    check(
        ok,
        format!(
            "precision {:.4}, recall {:.4}, F1 {:.4}, macro F1 {:.4} (need 0.80, 0.77, 0.89, 0.97 within 0.005)",
            got[0], got[1], got[2], got[3]
        ),
    )
}

fn path_graph_adjacency() -> Outcome {
    let a: Array2<f64> = array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
    let (h, s, t) = (0.5, 1.0 / 6f64.sqrt(), 1.0 / 3.0);
    let want = array![[h, s, 0.0], [s, t, s], [0.0, s, h]];
    let err = (normalize_adjacency(&a) - want).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    check(err <= 1e-12, format!("max deviation {err:.2e} (need <= 1e-12)"))
}

fn run_bin(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_circuit-graph")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(root: &Path, suite: &str) -> Result<(), String> {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let (data, model, eval) = (s(&root.join("data")), s(&root.join("model.json")), s(&root.join("eval")));
    let flags = ["--suite", suite, "--per-class", "20", "--seed", "7", "--epochs", "5"];
    run_bin(&[&["gen", "--out", &data][..], &flags].concat())?;
    run_bin(&[&["train", "--data", &data, "--out", &model][..], &flags].concat())?;
    run_bin(&[&["eval", "--data", &data, "--model", &model, "--out", &eval][..], &flags].concat())
}

fn determinism() -> Outcome {
    let files =
        ["data/train.jsonl", "data/test.jsonl", "model.json", "model.history.json", "eval/report.json", "eval/metrics.csv"];
    let mut compared = 0;
    for suite in ["continuous", "switching"] {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        pipeline(a.path(), suite)?;
        pipeline(b.path(), suite)?;
        for f in files {
            let read = |d: &Path| fs::read(d.join(f)).map_err(|e| format!("{f}: {e}"));
            if read(a.path())? != read(b.path())? {
                return Err(format!("{suite}: {f} differs between runs"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} files byte-identical across two gen+train+eval runs"))
}

fn bond_graph_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let circuit = common::random_continuous_circuit(&mut rng);
        let g = to_bond_graph(&circuit).map_err(|e| e.to_string())?;
        if g.node_count() != circuit.nets().len() + 2 * circuit.elements.len() {
            return Err(format!("case {case}: node count {}", g.node_count()));
        }
        for node in &g.nodes {
            let want = match node.kind {
                BgNodeKind::Junction1 => Some(3),
                BgNodeKind::Junction0 => None,
                _ => Some(1),
            };
            if want.is_some_and(|d| d != g.degree(node.id)) {
                return Err(format!("case {case}: {:?} node {} has degree {}", node.kind, node.id, g.degree(node.id)));
            }
        }
        if !isomorphic(&Labeled::from_graph(&g), &expected_graph(&circuit)) {
            return Err(format!("case {case}: graph differs from the independent construction"));
        }
    }
    let mut cells = 0;
    for g in generate_graphs(&switching_templates(), 200, 21).map_err(|e| e.to_string())? {
        if g.mode != Mode::Dcm {
            continue;
        }
        let sum: f64 = g
            .nodes
            .iter()
            .filter(|n| n.kind == BgNodeKind::Junction1s)
            .map(|n| g.neighbors(n.id).next().map(|(_, w)| w).unwrap_or(0.0))
            .sum();
        if sum != 1.0 {
            return Err(format!("DCM duty weights sum to {sum:?}"));
        }
        cells += 1;
    }
    Ok(format!("200 random circuits match degrees, counts and the oracle; {cells} DCM cells sum to exactly 1"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("continuous 7-class reproduction", continuous_reproduction),
        ("switching 6-class reproduction", switching_reproduction),
        ("feature-experiment direction", feature_experiment_direction),
        ("gradient correctness", gradient_correctness),
        ("permutation invariance", permutation_invariance),
        ("metrics oracle", metrics_oracle),
        ("path-graph normalized adjacency", path_graph_adjacency),
        ("determinism", determinism),
        ("bond-graph structural oracle", bond_graph_oracle),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
