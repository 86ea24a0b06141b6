//! Classifier evaluation: confusion matrix, per-class scores, averages and
//! a 2-D projection of graph readouts.

mod embed;
mod render;

use serde::{Deserialize, Serialize};

use crate::featurize::GraphSample;
use crate::gcn::{check_prepared, forward_prepared, GcnError, GcnModel, PreparedGraph};
use crate::scalar::Scalar;

pub use embed::{embed_2d, principal_components, Embedding, PCA_MAX_ITERATIONS, PCA_TOLERANCE};
pub use render::{embeddings_csv, embeddings_svg, format_table, metrics_csv};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self { counts: vec![vec![0; classes]; classes] }
    }

    pub fn from_pairs(classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(classes);
        for (t, p) in pairs {
            m.record(t, p);
        }
        m
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> usize {
        self.counts.iter().map(|row| row[class]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Set when nothing was predicted as this class; precision is then 0.
    pub precision_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Averages {
    fn rounded(self) -> Self {
        Self { precision: round2(self.precision), recall: round2(self.recall), f1: round2(self.f1) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub x: f64,
    pub y: f64,
    pub true_label: usize,
    pub predicted: usize,
}

/// Report values rounded to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedReport {
    pub per_class: Vec<Averages>,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub accuracy: f64,
    pub rounded: RoundedReport,
    pub embeddings: Vec<EmbeddedPoint>,
    /// All readouts coincided, so every point sits at the origin.
    pub embedding_degenerate: bool,
}

pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

pub fn class_metrics(confusion: &ConfusionMatrix, class: usize) -> ClassMetrics {
    let tp = confusion.counts[class][class];
    let support = confusion.support(class);
    let precision = ratio(tp, confusion.predicted(class));
    let recall = ratio(tp, support).unwrap_or(0.0);
    ClassMetrics {
        precision: precision.unwrap_or(0.0),
        recall,
        f1: f1(precision.unwrap_or(0.0), recall),
        support,
        precision_undefined: precision.is_none(),
    }
}

/// Scores derived from a confusion matrix alone; `embeddings` is empty.
pub fn from_confusion(confusion: ConfusionMatrix) -> EvalReport {
    let classes = confusion.classes();
    let per_class: Vec<ClassMetrics> = (0..classes).map(|c| class_metrics(&confusion, c)).collect();
    let total = confusion.total();
    let mean = |f: &dyn Fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / classes.max(1) as f64;
    let weighted =
        |f: &dyn Fn(&ClassMetrics) -> f64| per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total.max(1) as f64;
    let macro_avg = Averages { precision: mean(&|m| m.precision), recall: mean(&|m| m.recall), f1: mean(&|m| m.f1) };
    let weighted_avg =
        Averages { precision: weighted(&|m| m.precision), recall: weighted(&|m| m.recall), f1: weighted(&|m| m.f1) };
    let accuracy = ratio(confusion.trace(), total).unwrap_or(0.0);
    let rounded = RoundedReport {
        per_class: per_class.iter().map(|m| Averages { precision: m.precision, recall: m.recall, f1: m.f1 }.rounded()).collect(),
        macro_avg: macro_avg.rounded(),
        weighted_avg: weighted_avg.rounded(),
        accuracy: round2(accuracy),
    };
    EvalReport {
        confusion,
        per_class,
        macro_avg,
        weighted_avg,
        accuracy,
        rounded,
        embeddings: Vec::new(),
        embedding_degenerate: false,
    }
}

/// Runs the model over `samples` and scores its predictions. Embeddings are
/// the readout vectors projected onto their top two principal components.
pub fn evaluate<T: Scalar>(model: &GcnModel<T>, samples: &[GraphSample<T>]) -> Result<EvalReport, GcnError> {
    if samples.is_empty() {
        return Err(GcnError::EmptyDataset);
    }
    let classes = model.dims.classes;
    let mut confusion = ConfusionMatrix::new(classes);
    let mut readouts = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in samples {
        let g = PreparedGraph::new(s);
        check_prepared(model, &g)?;
        if s.label >= classes {
            return Err(GcnError::LabelOutOfRange { label: s.label, classes });
        }
        let pass = forward_prepared(model, &g);
        let predicted = pass.predicted();
        confusion.record(s.label, predicted);
        readouts.push(pass.readout.iter().map(|v| v.to_f64_lossy()).collect::<Vec<f64>>());
        labels.push((s.label, predicted));
    }
    let embedding = embed_2d(&readouts);
    let mut report = from_confusion(confusion);
    report.embeddings = embedding
        .points
        .iter()
        .zip(&labels)
        .map(|(&(x, y), &(true_label, predicted))| EmbeddedPoint { x, y, true_label, predicted })
        .collect();
    report.embedding_degenerate = embedding.degenerate;
    Ok(report)
}
