//! Synthetic dataset generation, stratified splitting and JSONL persistence.
//!
//! Sample `i` of class `c` is drawn from its own ChaCha8 stream
//! `(c << 32) | i` under the dataset seed, so a sample does not depend on how
//! many other samples or classes are generated alongside it.

mod io;
mod templates;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bondgraph::{to_bond_graph, BondGraph, BondGraphError};
use crate::featurize::{featurize, fit_normalization, FeatureConfig, FeatureError, GraphSample, NormalizationBase};
use crate::netlist::NetlistError;

pub use io::{load_dataset, save_dataset, SCHEMA_VERSION};
pub use templates::{
    continuous_templates, switching_templates, ClassTemplate, Instance, Operating, ParamRange, CAPACITANCE, CCM_DUTY, DCM_DUTY,
    DCM_SECOND_SHARE, FREQUENCY_RATIO, INDUCTANCE, RESISTANCE, SOURCE, SWITCHING_FREQUENCY,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("template produced an unparsable netlist: {0}")]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    BondGraph(#[from] BondGraphError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("split leaves class {class} without a train or test sample")]
    DegenerateSplit { class: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// The file is not a complete schema-1 dataset: wrong version, truncated,
    /// or inconsistent with its own header.
    #[error("dataset does not match schema {expected}: {reason}")]
    SchemaVersionMismatch { expected: u64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Seven resonant circuit classes.
    Continuous,
    /// Buck, boost and buck-boost in CCM and DCM.
    Switching,
}

impl Suite {
    pub fn templates(self) -> Vec<ClassTemplate> {
        match self {
            Suite::Continuous => continuous_templates(),
            Suite::Switching => switching_templates(),
        }
    }

    /// Configuration used when none is given.
    pub fn default_feature_config(self) -> FeatureConfig {
        match self {
            Suite::Continuous => FeatureConfig::OPTIMAL,
            Suite::Switching => FeatureConfig::OPTIMAL.with_switching_columns(),
        }
    }

    pub fn class_count(self) -> usize {
        self.templates().len()
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" | "continuous7" => Ok(Suite::Continuous),
            "switching" | "switching6" => Ok(Suite::Switching),
            other => Err(format!("unknown suite `{other}` (expected continuous or switching)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Continuous => "continuous",
            Suite::Switching => "switching",
        })
    }
}

/// Featurized samples together with everything needed to featurize more.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub feature_config: FeatureConfig,
    pub normalization: NormalizationBase,
    pub seed: u64,
    pub samples: Vec<GraphSample<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Samples per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    fn with_samples(&self, samples: Vec<GraphSample<f64>>) -> Self {
        Self { samples, ..self.clone() }
    }
}

/// Draws sample `index` of `template`. The returned graph is labelled with
/// `label` and carries the template's analytic resonance frequency.
pub fn sample_graph(template: &ClassTemplate, label: usize, index: u32, seed: u64) -> Result<BondGraph, DatagenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((template.class_id as u64) << 32) | u64::from(index));
    let mut inst = template.instantiate(&mut rng)?;
    inst.circuit.class_label = Some(label);
    let mut graph = to_bond_graph(&inst.circuit)?;
    graph.resonance_hz = Some(inst.resonance_hz);
    Ok(graph)
}

/// Bond graphs for `per_class` samples of each template, grouped by class.
/// Labels are positions in `templates`.
pub fn generate_graphs(templates: &[ClassTemplate], per_class: usize, seed: u64) -> Result<Vec<BondGraph>, DatagenError> {
    if templates.is_empty() || per_class == 0 {
        return Err(DatagenError::InvalidArgument("need at least one class and one sample per class".into()));
    }
    let per_class = u32::try_from(per_class).map_err(|_| DatagenError::InvalidArgument("per_class too large".into()))?;
    let mut graphs = Vec::with_capacity(templates.len() * per_class as usize);
    for (label, t) in templates.iter().enumerate() {
        for i in 0..per_class {
            graphs.push(sample_graph(t, label, i, seed)?);
        }
    }
    Ok(graphs)
}

fn featurize_all(
    graphs: &[BondGraph],
    base: &NormalizationBase,
    config: &FeatureConfig,
) -> Result<Vec<GraphSample<f64>>, FeatureError> {
    graphs.iter().map(|g| featurize(g, base, config)).collect()
}

fn class_names(templates: &[ClassTemplate]) -> Vec<String> {
    templates.iter().map(|t| t.name.to_string()).collect()
}

/// Generates `per_class` samples of every class of `suite`, normalized over
/// the whole set.
pub fn generate(suite: Suite, per_class: usize, seed: u64, config: &FeatureConfig) -> Result<Dataset, DatagenError> {
    generate_from(&suite.templates(), per_class, seed, config)
}

/// Generates a dataset whose normalization is fitted on all of its samples.
pub fn generate_from(
    templates: &[ClassTemplate],
    per_class: usize,
    seed: u64,
    config: &FeatureConfig,
) -> Result<Dataset, DatagenError> {
    let graphs = generate_graphs(templates, per_class, seed)?;
    let normalization = fit_normalization(&graphs, config)?;
    let samples = featurize_all(&graphs, &normalization, config)?;
    Ok(Dataset { class_names: class_names(templates), feature_config: *config, normalization, seed, samples })
}

/// Generates a stratified train/test pair. The normalization is fitted on the
/// training graphs only and shared by both halves.
pub fn generate_split(
    templates: &[ClassTemplate],
    per_class: usize,
    seed: u64,
    config: &FeatureConfig,
    train_fraction: f64,
) -> Result<(Dataset, Dataset), DatagenError> {
    let graphs = generate_graphs(templates, per_class, seed)?;
    let labels: Vec<usize> = graphs.iter().map(|g| g.class_label.unwrap_or(0)).collect();
    let (train_idx, test_idx) = stratified_split(&labels, train_fraction, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| graphs[i].clone()).collect::<Vec<_>>();
    let (train_graphs, test_graphs) = (pick(&train_idx), pick(&test_idx));
    let normalization = fit_normalization(&train_graphs, config)?;
    let dataset = |graphs: &[BondGraph]| -> Result<Dataset, DatagenError> {
        Ok(Dataset {
            class_names: class_names(templates),
            feature_config: *config,
            normalization: normalization.clone(),
            seed,
            samples: featurize_all(graphs, &normalization, config)?,
        })
    };
    Ok((dataset(&train_graphs)?, dataset(&test_graphs)?))
}

/// Number of training samples per class: `round(N * fraction)` in total,
/// shared out by largest remainder (ties to the lower class).
pub fn allocate_train_counts(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    let target = (total as f64 * fraction).round() as usize;
    let exact: Vec<f64> = class_sizes.iter().map(|&n| n as f64 * fraction).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &c in order.iter().take(target.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Stratified shuffled split of sample indices by label.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DatagenError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatagenError::InvalidArgument(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let counts = allocate_train_counts(&sizes, train_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if counts[class] == 0 || counts[class] == members.len() {
            return Err(DatagenError::DegenerateSplit { class });
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..counts[class]]);
        test.extend_from_slice(&members[counts[class]..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

/// Splits an already featurized dataset; both halves keep its normalization.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatagenError> {
    let (train, test) = stratified_split(&dataset.labels(), train_fraction, seed)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| dataset.samples[i].clone()).collect();
    Ok((dataset.with_samples(pick(train)), dataset.with_samples(pick(test))))
}

/// Templates at the given positions of the continuous suite, relabelled
/// `0..classes.len()` in the given order.
pub fn continuous_subset(classes: &[usize]) -> Result<Vec<ClassTemplate>, DatagenError> {
    let all = continuous_templates();
    classes
        .iter()
        .map(|&c| all.get(c).cloned().ok_or_else(|| DatagenError::InvalidArgument(format!("no continuous class {c}"))))
        .collect()
}
