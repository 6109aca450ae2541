use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::scene::{make_camera_rig, CameraRig, NoiseConfig};
use crate::segmentation::{CenterInit, SweepConfig, DEFAULT_TAUS};
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigConfig {
    pub views: usize,
    pub elevation_deg: f64,
    pub radius: f64,
    pub image_size: usize,
    pub fov_deg: f64,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            views: 16,
            elevation_deg: 30.0,
            radius: 2.7,
            image_size: 64,
            fov_deg: 40.0,
        }
    }
}

impl RigConfig {
    pub fn build(&self) -> Result<CameraRig> {
        make_camera_rig(self.views, self.elevation_deg, self.radius, self.image_size, self.fov_deg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub taus: Vec<f64>,
    /// Fixed part count instead of the mask graph.
    pub parts: Option<usize>,
    pub center_init: CenterInit,
    /// Occlusion tolerance as a fraction of the mesh bounding-box diagonal.
    pub eps_occ_frac: f64,
    /// Ray samples for the depth maps rendered from the model.
    pub depth_samples: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            taus: DEFAULT_TAUS.to_vec(),
            parts: None,
            center_init: CenterInit::Seeds,
            eps_occ_frac: 0.02,
            depth_samples: 128,
        }
    }
}

impl SegmentConfig {
    pub fn sweep(&self, diameter: f64) -> SweepConfig {
        SweepConfig {
            taus: self.taus.clone(),
            parts: self.parts,
            eps_occ: self.eps_occ_frac * diameter,
            center_init: self.center_init,
        }
    }
}

/// Everything a run needs. `scene` and `output` have no defaults and must come
/// from the config file or a flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scene: Option<String>,
    pub output: Option<PathBuf>,
    /// Seed of the mask perturbation.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rig: RigConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub segment: SegmentConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

impl RunConfig {
    /// Merges `overrides` into the config file at `path` (if any) and parses
    /// the result. Override keys are dotted paths such as `train.steps`.
    pub fn load(path: Option<&Path>, overrides: &[(&str, Value)]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for (key, value) in overrides {
            set_dotted(&mut table, key, value.clone());
        }
        let cfg: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.train.validate()?;
        cfg.noise.validate()?;
        Ok(cfg)
    }

    pub fn require_scene(&self) -> Result<&str> {
        self.scene.as_deref().ok_or_else(|| missing("scene"))
    }

    pub fn require_output(&self) -> Result<&Path> {
        self.output.as_deref().ok_or_else(|| missing("output"))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml_string().as_bytes())
    }
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing config key `{key}`"))
}

fn set_dotted(table: &mut Table, key: &str, value: Value) {
    let mut parts = key.split('.').peekable();
    let mut cur = table;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            cur.insert(part.to_string(), value);
            return;
        }
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        if !entry.is_table() {
            *entry = Value::Table(Table::new());
        }
        cur = entry.as_table_mut().expect("table");
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn flags_override_file_values() {
        let f = write("scene = \"one_sphere\"\noutput = \"out\"\n[train]\nsteps = 5\nalpha = 0.1\n");
        let cfg = RunConfig::load(
            Some(f.path()),
            &[("train.steps", Value::Integer(9)), ("rig.views", Value::Integer(6))],
        )
        .unwrap();
        assert_eq!(cfg.train.steps, 9);
        assert_eq!(cfg.train.alpha, 0.1);
        assert_eq!(cfg.rig.views, 6);
        assert_eq!(cfg.require_scene().unwrap(), "one_sphere");
    }

    #[test]
    fn missing_required_key_is_named() {
        let f = write("output = \"out\"\n");
        let cfg = RunConfig::load(Some(f.path()), &[]).unwrap();
        let err = cfg.require_scene().unwrap_err().to_string();
        assert!(err.contains("`scene`"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = write("scene = \"x\"\n[train]\nstepz = 3\n");
        let err = RunConfig::load(Some(f.path()), &[]).unwrap_err().to_string();
        assert!(err.contains("stepz"), "{err}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::load(None, &[("scene", Value::String("a".into()))]).unwrap();
        let b = RunConfig::load(None, &[("scene", Value::String("a".into()))]).unwrap();
        let c = RunConfig::load(None, &[("scene", Value::String("b".into()))]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::load(None, &[("scene", Value::String("two_spheres".into()))]).unwrap();
        let f = write(&cfg.to_toml_string());
        assert_eq!(RunConfig::load(Some(f.path()), &[]).unwrap(), cfg);
    }
}
