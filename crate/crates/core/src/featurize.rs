//! Bond graph to numeric graph sample.
//!
//! Each node row is a 9-wide one-hot element ID followed by the normalized
//! component value and, optionally, phase and frequency columns. The column
//! order of the first seven IDs is V, I, L, R, C, 1, 0; switched junctions
//! 1s and 0s take the last two positions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bondgraph::{BgNode, BgNodeKind, BondGraph};
use crate::scalar::Scalar;

pub const ONE_HOT_WIDTH: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    Ones,
    Frequency,
    NormalizedFrequency,
    ScalingFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapRepr {
    Raw,
    Inverse,
    NegativeInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndRepr {
    Raw,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub edge_mode: EdgeMode,
    pub cap_repr: CapRepr,
    pub ind_repr: IndRepr,
    pub include_phase_column: bool,
    pub include_frequency_column: bool,
}

impl FeatureConfig {
    /// Unit edge weights, capacitors as 1/C, inductors as L.
    pub const OPTIMAL: FeatureConfig = FeatureConfig {
        edge_mode: EdgeMode::Ones,
        cap_repr: CapRepr::Inverse,
        ind_repr: IndRepr::Raw,
        include_phase_column: false,
        include_frequency_column: false,
    };

    pub const fn new(edge_mode: EdgeMode, cap_repr: CapRepr, ind_repr: IndRepr) -> Self {
        Self { edge_mode, cap_repr, ind_repr, include_phase_column: false, include_frequency_column: false }
    }

    /// Adds the phase and switching-frequency columns used for converters.
    pub const fn with_switching_columns(mut self) -> Self {
        self.include_phase_column = true;
        self.include_frequency_column = true;
        self
    }

    pub fn feature_dim(&self) -> usize {
        ONE_HOT_WIDTH + 1 + usize::from(self.include_phase_column) + usize::from(self.include_frequency_column)
    }

    /// Stable hex digest identifying this configuration in checkpoints.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("feature config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    fn needs_frequency_base(&self) -> bool {
        self.include_frequency_column || self.edge_mode == EdgeMode::Frequency
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::OPTIMAL
    }
}

/// Quantity sharing one normalization maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueCategory {
    EffortSource,
    FlowSource,
    Resistance,
    Inertance,
    Compliance,
    Frequency,
    FrequencyRatio,
}

impl ValueCategory {
    pub fn of_kind(kind: BgNodeKind) -> Option<Self> {
        match kind {
            BgNodeKind::Se => Some(Self::EffortSource),
            BgNodeKind::Sf => Some(Self::FlowSource),
            BgNodeKind::R => Some(Self::Resistance),
            BgNodeKind::I => Some(Self::Inertance),
            BgNodeKind::C => Some(Self::Compliance),
            _ => None,
        }
    }
}

/// Per-category maxima of absolute transformed values over a fitting set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizationBase {
    pub maxima: BTreeMap<ValueCategory, f64>,
}

impl NormalizationBase {
    pub fn get(&self, category: ValueCategory) -> Result<f64, FeatureError> {
        self.maxima.get(&category).copied().ok_or(FeatureError::MissingCategoryInBase(category))
    }

    fn observe(&mut self, category: ValueCategory, value: f64) {
        let v = value.abs();
        if v > 0.0 {
            let m = self.maxima.entry(category).or_insert(0.0);
            *m = m.max(v);
        }
    }

    /// Element-wise maximum; fitting is an associative reduction.
    pub fn merge(mut self, other: &NormalizationBase) -> Self {
        for (&k, &v) in &other.maxima {
            self.observe(k, v);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("inverse representation of a zero-valued {0:?} node")]
    DivisionByZero(BgNodeKind),
    #[error("cannot fit normalization on an empty dataset")]
    EmptyDataset,
    #[error("normalization base has no entry for {0:?}")]
    MissingCategoryInBase(ValueCategory),
    #[error("normalized-frequency edges need the graph's resonance frequency")]
    MissingResonance,
    #[error("graph has no class label")]
    MissingLabel,
}

/// Numeric graph: node features `x` (N x d_in), symmetric weighted adjacency
/// (N x N, zero diagonal) and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample<T = f64> {
    pub x: Array2<T>,
    pub adjacency: Array2<T>,
    pub label: usize,
}

impl<T: Scalar> GraphSample<T> {
    pub fn node_count(&self) -> usize {
        self.x.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn cast<U: Scalar>(&self) -> GraphSample<U> {
        GraphSample {
            x: self.x.mapv(|v| U::of(v.to_f64_lossy())),
            adjacency: self.adjacency.mapv(|v| U::of(v.to_f64_lossy())),
            label: self.label,
        }
    }

    /// Relabels nodes so that old node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.node_count();
        assert_eq!(perm.len(), n);
        let mut x = Array2::zeros(self.x.raw_dim());
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            x.row_mut(perm[i]).assign(&self.x.row(i));
            for j in 0..n {
                a[[perm[i], perm[j]]] = self.adjacency[[i, j]];
            }
        }
        Self { x, adjacency: a, label: self.label }
    }
}

pub fn one_hot_index(kind: BgNodeKind) -> usize {
    match kind {
        BgNodeKind::Se => 0,
        BgNodeKind::Sf => 1,
        BgNodeKind::I => 2,
        BgNodeKind::R => 3,
        BgNodeKind::C => 4,
        BgNodeKind::Junction1 => 5,
        BgNodeKind::Junction0 => 6,
        BgNodeKind::Junction1s => 7,
        BgNodeKind::Junction0s => 8,
    }
}

pub fn one_hot(kind: BgNodeKind) -> [f64; ONE_HOT_WIDTH] {
    let mut v = [0.0; ONE_HOT_WIDTH];
    v[one_hot_index(kind)] = 1.0;
    v
}

pub fn transform_value(kind: BgNodeKind, value: f64, config: &FeatureConfig) -> Result<f64, FeatureError> {
    let inverse = |v: f64| if v == 0.0 { Err(FeatureError::DivisionByZero(kind)) } else { Ok(1.0 / v) };
    match (kind, config.cap_repr, config.ind_repr) {
        (BgNodeKind::C, CapRepr::Inverse, _) => inverse(value),
        (BgNodeKind::C, CapRepr::NegativeInverse, _) => inverse(value).map(|v| -v),
        (BgNodeKind::I, _, IndRepr::Inverse) => inverse(value),
        _ => Ok(value),
    }
}

fn frequency_ratio(graph: &BondGraph) -> Result<f64, FeatureError> {
    let f_res = graph.resonance_hz.filter(|f| *f > 0.0).ok_or(FeatureError::MissingResonance)?;
    Ok(graph.frequency / f_res)
}

fn fit_one(graph: &BondGraph, config: &FeatureConfig) -> Result<NormalizationBase, FeatureError> {
    let mut base = NormalizationBase::default();
    for node in &graph.nodes {
        if let Some(cat) = ValueCategory::of_kind(node.kind) {
            if node.value != 0.0 {
                base.observe(cat, transform_value(node.kind, node.value, config)?);
            }
        }
        if config.needs_frequency_base() {
            base.observe(ValueCategory::Frequency, node.frequency);
        }
    }
    if config.edge_mode == EdgeMode::Frequency {
        base.observe(ValueCategory::Frequency, graph.frequency);
    }
    if config.edge_mode == EdgeMode::NormalizedFrequency {
        base.observe(ValueCategory::FrequencyRatio, frequency_ratio(graph)?);
    }
    Ok(base)
}

/// Per-category max-abs of transformed values over `graphs`.
pub fn fit_normalization(graphs: &[BondGraph], config: &FeatureConfig) -> Result<NormalizationBase, FeatureError> {
    if graphs.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    graphs.iter().map(|g| fit_one(g, config)).try_fold(NormalizationBase::default(), |acc, b| Ok(acc.merge(&b?)))
}

fn normalized_value(node: &BgNode, base: &NormalizationBase, config: &FeatureConfig) -> Result<f64, FeatureError> {
    match ValueCategory::of_kind(node.kind) {
        Some(cat) if node.value != 0.0 => Ok(transform_value(node.kind, node.value, config)? / base.get(cat)?),
        _ => Ok(0.0),
    }
}

fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p - 2.0 * PI
    } else {
        p
    }
}

pub fn featurize(graph: &BondGraph, base: &NormalizationBase, config: &FeatureConfig) -> Result<GraphSample<f64>, FeatureError> {
    let label = graph.class_label.ok_or(FeatureError::MissingLabel)?;
    let n = graph.node_count();
    let mut x = Array2::<f64>::zeros((n, config.feature_dim()));
    let mut values = vec![0.0; n];

    for (i, node) in graph.nodes.iter().enumerate() {
        let mut row = x.row_mut(i);
        row[one_hot_index(node.kind)] = 1.0;
        values[i] = normalized_value(node, base, config)?;
        let mut col = ONE_HOT_WIDTH;
        row[col] = if config.edge_mode == EdgeMode::ScalingFactor { 0.0 } else { values[i] };
        col += 1;
        if config.include_phase_column {
            row[col] = wrap_phase(node.phase) / PI;
            col += 1;
        }
        if config.include_frequency_column && node.frequency > 0.0 {
            row[col] = node.frequency / base.get(ValueCategory::Frequency)?;
        }
    }

    let uniform = match config.edge_mode {
        EdgeMode::Ones | EdgeMode::ScalingFactor => 1.0,
        EdgeMode::Frequency => graph.frequency / base.get(ValueCategory::Frequency)?,
        EdgeMode::NormalizedFrequency => frequency_ratio(graph)? / base.get(ValueCategory::FrequencyRatio)?,
    };
    let mut adjacency = Array2::<f64>::zeros((n, n));
    for e in &graph.edges {
        let (ka, kb) = (graph.nodes[e.a].kind, graph.nodes[e.b].kind);
        let w = if ka.is_switched() || kb.is_switched() {
            e.weight
        } else if config.edge_mode == EdgeMode::ScalingFactor && !(ka.is_junction() && kb.is_junction()) {
            let element = if ka.is_junction() { e.b } else { e.a };
            values[element].abs()
        } else {
            uniform
        };
        let w = w.clamp(0.0, 1.0);
        adjacency[[e.a, e.b]] = w;
        adjacency[[e.b, e.a]] = w;
    }
    Ok(GraphSample { x, adjacency, label })
}
