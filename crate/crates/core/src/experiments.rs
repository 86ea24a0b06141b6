//! The feature-representation experiment grid: four sets of three runs on
//! the continuous suite.
//!
//! | set | classes        | runs                                                        |
//! |-----|----------------|-------------------------------------------------------------|
//! | 1   | 0, 1, 2        | edge = frequency, ones, normalized frequency (raw C, raw L) |
//! | 2   | 0, 1, 2        | normalized-frequency edges with C, 1/C, -1/C                |
//! | 3   | 0, 1, 2        | 1/C with scaling-factor edges, ones, ones plus 1/L          |
//! | 4   | 4, 5, 7 first  | optimal representation                                      |

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::datagen::{continuous_subset, generate_split, DatagenError};
use crate::featurize::{CapRepr, EdgeMode, FeatureConfig, IndRepr};
use crate::gcn::{train, GcnError, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub set: u8,
    pub label: String,
    pub classes: Vec<usize>,
    pub feature_config: FeatureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("experiment set must be 1 to 4, got {0}")]
    NoSuchSet(u8),
    #[error(transparent)]
    Data(#[from] DatagenError),
    #[error(transparent)]
    Training(#[from] GcnError),
}

const BASE_CLASSES: [usize; 3] = [0, 1, 2];

fn spec(set: u8, label: &str, classes: &[usize], edge: EdgeMode, cap: CapRepr, ind: IndRepr) -> ExperimentSpec {
    ExperimentSpec {
        set,
        label: label.to_string(),
        classes: classes.to_vec(),
        feature_config: FeatureConfig::new(edge, cap, ind),
    }
}

pub fn experiment_set(set: u8) -> Result<Vec<ExperimentSpec>, ExperimentError> {
    use CapRepr::*;
    use EdgeMode::*;
    let c = &BASE_CLASSES;
    Ok(match set {
        1 => vec![
            spec(1, "edge=frequency", c, Frequency, Raw, IndRepr::Raw),
            spec(1, "edge=ones", c, Ones, Raw, IndRepr::Raw),
            spec(1, "edge=normalized-frequency", c, NormalizedFrequency, Raw, IndRepr::Raw),
        ],
        2 => vec![
            spec(2, "C", c, NormalizedFrequency, Raw, IndRepr::Raw),
            spec(2, "1/C", c, NormalizedFrequency, Inverse, IndRepr::Raw),
            spec(2, "-1/C", c, NormalizedFrequency, NegativeInverse, IndRepr::Raw),
        ],
        3 => vec![
            spec(3, "edge=scaling-factor, 1/C", c, ScalingFactor, Inverse, IndRepr::Raw),
            spec(3, "edge=ones, 1/C", c, Ones, Inverse, IndRepr::Raw),
            spec(3, "edge=ones, 1/C, 1/L", c, Ones, Inverse, IndRepr::Inverse),
        ],
        4 => [4usize, 5, 7]
            .iter()
            .map(|&k| ExperimentSpec {
                set: 4,
                label: format!("{k} classes"),
                classes: (0..k).collect(),
                feature_config: FeatureConfig::OPTIMAL,
            })
            .collect(),
        other => return Err(ExperimentError::NoSuchSet(other)),
    })
}

/// Generates the spec's class subset, splits 70/30 and trains from `seed`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    per_class: usize,
    seed: u64,
    config: &TrainConfig,
) -> Result<ExperimentResult, ExperimentError> {
    let templates = continuous_subset(&spec.classes)?;
    let (train_set, test_set) = generate_split(&templates, per_class, seed, &spec.feature_config, 0.7)?;
    let (_, history) = train(&train_set.samples, &test_set.samples, seed, config)?;
    let last = history.last().copied().expect("at least one epoch");
    Ok(ExperimentResult {
        spec: spec.clone(),
        train_accuracy: last.train_accuracy,
        test_accuracy: last.test_accuracy,
        final_train_loss: last.train_loss,
    })
}

pub fn run_set(set: u8, per_class: usize, seed: u64, config: &TrainConfig) -> Result<Vec<ExperimentResult>, ExperimentError> {
    experiment_set(set)?.iter().map(|s| run_experiment(s, per_class, seed, config)).collect()
}

pub fn format_results(results: &[ExperimentResult]) -> String {
    let width = results.iter().map(|r| r.spec.label.len()).max().unwrap_or(0).max(13);
    let mut s = format!("{:<4} {:<width$} {:>9} {:>9} {:>10}\n", "set", "configuration", "train", "test", "loss");
    for r in results {
        let _ = writeln!(
            s,
            "{:<4} {:<width$} {:>8.2}% {:>8.2}% {:>10.5}",
            r.spec.set,
            r.spec.label,
            100.0 * r.train_accuracy,
            100.0 * r.test_accuracy,
            r.final_train_loss
        );
    }
    s
}
