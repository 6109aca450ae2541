use std::fs::OpenOptions;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::accuracy::{ground_truth_labels, label_accuracy};
use super::chamfer::chamfer_distance;
use super::iou::volume_iou;
use crate::error::{Error, Result};
use crate::meshing::LabeledMesh;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_samples: usize,
    pub grid_res: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            grid_res: 128,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// World units; infinite for an empty mesh (written as `"inf"`).
    #[serde(serialize_with = "write_chamfer", deserialize_with = "read_chamfer")]
    pub chamfer: f64,
    pub volume_iou: f64,
    pub label_accuracy: f64,
    pub part_count_pred: usize,
    pub part_count_gt: usize,
}

fn write_chamfer<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn read_chamfer<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Value {
        Number(f64),
        Text(String),
    }
    match Value::deserialize(d)? {
        Value::Number(v) => Ok(v),
        Value::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Value::Text(t) => Err(serde::de::Error::custom(format!("bad chamfer value {t:?}"))),
    }
}

/// Scores a labeled mesh against its scene.
pub fn evaluate(mesh: &LabeledMesh, scene: &Scene, cfg: &EvalConfig) -> EvalReport {
    if mesh.is_empty() {
        log::warn!("evaluating an empty mesh");
    }
    let gt = ground_truth_labels(mesh, scene);
    EvalReport {
        chamfer: chamfer_distance(mesh, scene, cfg.n_samples, cfg.seed),
        volume_iou: volume_iou(mesh, scene, cfg.grid_res),
        label_accuracy: label_accuracy(&mesh.vertex_labels, &gt),
        part_count_pred: mesh.labels().len(),
        part_count_gt: scene.n_parts(),
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad report: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::load(path, e.to_string()))
    }

    /// Appends one row to a CSV run log, writing the header when the file is new.
    pub fn append_to_log(&self, path: &Path, run: &str) -> Result<()> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let to_err = |e: csv::Error| Error::load(path, e.to_string());
        if fresh {
            w.write_record(["run", "chamfer", "volume_iou", "label_accuracy", "part_count_pred", "part_count_gt"])
                .map_err(to_err)?;
        }
        w.write_record([
            run.to_string(),
            self.chamfer.to_string(),
            self.volume_iou.to_string(),
            self.label_accuracy.to_string(),
            self.part_count_pred.to_string(),
            self.part_count_gt.to_string(),
        ])
        .map_err(to_err)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}
