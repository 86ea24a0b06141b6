use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{DatagenError, Dataset};
use crate::featurize::{FeatureConfig, GraphSample, NormalizationBase};

pub const SCHEMA_VERSION: u64 = 1;

fn mismatch(line: usize, reason: String) -> DatagenError {
    DatagenError::SchemaVersionMismatch { expected: SCHEMA_VERSION, reason: format!("line {line}: {reason}") }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: u64,
    classes: Vec<String>,
    feature_config: FeatureConfig,
    normalization: NormalizationBase,
    seed: u64,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct SampleLine {
    id: usize,
    label: usize,
    n: usize,
    x: Vec<Vec<f64>>,
    /// Upper-triangle nonzero adjacency entries `[i, j, w]` with `i < j`.
    edges: Vec<(usize, usize, f64)>,
}

impl SampleLine {
    fn from_sample(id: usize, s: &GraphSample<f64>) -> Self {
        let n = s.node_count();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = s.adjacency[[i, j]];
                if w != 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Self { id, label: s.label, n, x: s.x.rows().into_iter().map(|r| r.to_vec()).collect(), edges }
    }

    fn into_sample(self, line: usize, dim: usize, classes: usize) -> Result<GraphSample<f64>, DatagenError> {
        let bad = |reason: String| mismatch(line, reason);
        if self.label >= classes {
            return Err(bad(format!("label {} out of range for {classes} classes", self.label)));
        }
        if self.x.len() != self.n || self.x.iter().any(|r| r.len() != dim) {
            return Err(bad(format!("feature matrix is not {} x {dim}", self.n)));
        }
        let x = Array2::from_shape_vec((self.n, dim), self.x.into_iter().flatten().collect()).map_err(|e| bad(e.to_string()))?;
        let mut adjacency = Array2::zeros((self.n, self.n));
        for (i, j, w) in self.edges {
            if i >= j || j >= self.n {
                return Err(bad(format!("edge ({i}, {j}) is not an upper-triangle entry of a {}-node graph", self.n)));
            }
            adjacency[[i, j]] = w;
            adjacency[[j, i]] = w;
        }
        Ok(GraphSample { x, adjacency, label: self.label })
    }
}

/// Writes a header line followed by one line per sample.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatagenError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let header = Header {
        schema: SCHEMA_VERSION,
        classes: dataset.class_names.clone(),
        feature_config: dataset.feature_config,
        normalization: dataset.normalization.clone(),
        seed: dataset.seed,
        count: dataset.samples.len(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for (id, s) in dataset.samples.iter().enumerate() {
        serde_json::to_writer(&mut out, &SampleLine::from_sample(id, s)).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatagenError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let malformed = |idx: usize, reason: String| mismatch(idx + 1, reason);

    let (_, first) = lines.next().ok_or_else(|| malformed(0, "missing header".into()))?;
    let raw: serde_json::Value = serde_json::from_str(first).map_err(|e| malformed(0, e.to_string()))?;
    let found = raw.get("schema").and_then(serde_json::Value::as_u64).unwrap_or(0);
    if found != SCHEMA_VERSION {
        return Err(malformed(0, format!("header declares schema {found}")));
    }
    let header: Header = serde_json::from_value(raw).map_err(|e| malformed(0, e.to_string()))?;
    let dim = header.feature_config.feature_dim();

    let mut samples = Vec::with_capacity(header.count);
    for (idx, line) in lines {
        let s: SampleLine = serde_json::from_str(line).map_err(|e| malformed(idx, e.to_string()))?;
        if s.id != samples.len() {
            return Err(malformed(idx, format!("expected id {}, found {}", samples.len(), s.id)));
        }
        samples.push(s.into_sample(idx + 1, dim, header.classes.len())?);
    }
    if samples.len() != header.count {
        return Err(malformed(0, format!("header announces {} samples, file has {}", header.count, samples.len())));
    }
    Ok(Dataset {
        class_names: header.classes,
        feature_config: header.feature_config,
        normalization: header.normalization,
        seed: header.seed,
        samples,
    })
}
