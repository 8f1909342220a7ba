//! File formats: model checkpoints, dataset CSV with JSON sidecar,
//! metrics, and plotting-ready grid/path exports.
//!
//! All floats are written in Rust's shortest round-trip notation, so
//! re-reading a file reproduces the original values bit for bit and
//! identical runs produce byte-identical artifacts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::net::{MlpModel, MlpSpec};
use crate::sampler::{Dataset, DatasetMeta};
use crate::{Error, Point2, Result};

/// On-disk model format.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    layer_sizes: Vec<usize>,
    activation: String,
    params: Vec<f64>,
}

pub fn model_to_json(model: &MlpModel) -> String {
    serde_json::to_string(&Checkpoint {
        layer_sizes: model.spec.layer_sizes.clone(),
        activation: "tanh".to_string(),
        params: model.params.clone(),
    })
    .expect("checkpoint serialization cannot fail")
}

pub fn model_from_json(text: &str) -> Result<MlpModel> {
    let ck: Checkpoint = serde_json::from_str(text)?;
    if ck.activation != "tanh" {
        return Err(Error::InvalidData(format!(
            "unsupported activation {:?}",
            ck.activation
        )));
    }
    if ck.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidData("non-finite parameter".into()));
    }
    MlpModel::from_params(MlpSpec::new(ck.layer_sizes)?, ck.params)
}

pub fn save_model(path: &Path, model: &MlpModel) -> Result<()> {
    fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    model_from_json(&fs::read_to_string(path)?)
}

/// Dataset CSV: header `x1,x2`, one state per row.
pub fn dataset_to_csv(points: &[Point2]) -> String {
    let mut out = String::from("x1,x2\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    out
}

/// Strict parser for the dataset CSV format.
pub fn parse_dataset_csv(text: &str) -> Result<Vec<Point2>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == "x1,x2" => {}
        other => {
            return Err(Error::InvalidData(format!(
                "expected header 'x1,x2', got {other:?}"
            )))
        }
    }
    let mut points = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (a, b) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::InvalidData(format!(
                    "line {}: expected two columns",
                    no + 2
                )))
            }
        };
        let x1: f64 = a
            .trim()
            .parse()
            .map_err(|e| Error::InvalidData(format!("line {}: {e}", no + 2)))?;
        let x2: f64 = b
            .trim()
            .parse()
            .map_err(|e| Error::InvalidData(format!("line {}: {e}", no + 2)))?;
        if !x1.is_finite() || !x2.is_finite() {
            return Err(Error::InvalidData(format!(
                "line {}: non-finite coordinate",
                no + 2
            )));
        }
        points.push([x1, x2]);
    }
    Ok(points)
}

pub fn write_dataset(dir: &Path, data: &Dataset, meta: &DatasetMeta) -> Result<()> {
    fs::write(dir.join("dataset.csv"), dataset_to_csv(&data.points))?;
    fs::write(
        dir.join("dataset_meta.json"),
        serde_json::to_string_pretty(meta)?,
    )?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<(Vec<Point2>, DatasetMeta)> {
    let points = parse_dataset_csv(&fs::read_to_string(dir.join("dataset.csv"))?)?;
    let meta: DatasetMeta =
        serde_json::from_str(&fs::read_to_string(dir.join("dataset_meta.json"))?)?;
    Ok((points, meta))
}

/// Per-epoch training record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub rayleigh: f64,
    pub penalty: f64,
}

pub fn write_metrics(path: &Path, metrics: &[EpochMetrics]) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(metrics)?)?;
    Ok(())
}

/// Generic columnar CSV writer.
pub fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// CSV of a transition path: `x1,x2` per node.
pub fn write_path_csv(path: &Path, nodes: &[Point2]) -> Result<()> {
    write_csv(path, "x1,x2", nodes.iter().map(|n| vec![n[0], n[1]]))
}
