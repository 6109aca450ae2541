use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldInit;
use crate::geom::Aabb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Heavy-ball gradient descent.
    Momentum,
    /// Momentum with per-parameter second-moment scaling.
    Adam,
}

/// Contrastive sampling sizes and loss weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveConfig {
    pub n_query: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub temperature: f64,
    pub alpha: f64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        Self {
            n_query: 64,
            n_pos: 4,
            n_neg: 16,
            temperature: 0.07,
            alpha: 0.02,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_query == 0 || self.n_pos == 0 || self.n_neg == 0 {
            return Err(Error::invalid("contrastive counts must be at least 1"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid("alpha must be non-negative"));
        }
        Ok(())
    }
}

/// Everything that controls a training run. Missing keys in a config file fall
/// back to these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub n_query: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Pixels per step for the reconstruction loss.
    pub ray_batch: usize,
    pub n_samples: usize,
    pub lambda_eik: f64,
    pub lambda_mask: f64,
    /// Random points per step for the eikonal term.
    pub eikonal_points: usize,
    pub optimizer: OptimizerKind,
    /// Learning rate of the feature and color channels.
    pub learning_rate: f64,
    /// Learning rate of the SDF channel.
    pub sdf_learning_rate: f64,
    /// Learning rate of the sharpness parameter.
    pub inv_std_learning_rate: f64,
    pub momentum: f64,
    /// Let contrastive gradients reach the SDF and sharpness through the rendering weights.
    pub contra_through_geometry: bool,
    pub resolution: usize,
    pub n_channels: usize,
    /// Half extent of the cubic model bounds around the origin.
    pub bounds_half_extent: f64,
    pub background: [f64; 3],
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            alpha: 0.02,
            temperature: 0.07,
            n_query: 64,
            n_pos: 4,
            n_neg: 16,
            ray_batch: 512,
            n_samples: 64,
            lambda_eik: 0.1,
            lambda_mask: 0.1,
            eikonal_points: 131_072,
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.01,
            sdf_learning_rate: 0.005,
            inv_std_learning_rate: 0.05,
            momentum: 0.9,
            contra_through_geometry: false,
            resolution: 64,
            n_channels: 8,
            bounds_half_extent: 1.0,
            background: [1.0, 1.0, 1.0],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn contrastive(&self) -> ContrastiveConfig {
        ContrastiveConfig {
            n_query: self.n_query,
            n_pos: self.n_pos,
            n_neg: self.n_neg,
            temperature: self.temperature,
            alpha: self.alpha,
        }
    }

    pub fn field_init(&self) -> FieldInit {
        FieldInit {
            resolution: self.resolution,
            n_channels: self.n_channels,
            bounds: Aabb::cube(self.bounds_half_extent),
            seed: self.seed,
            ..FieldInit::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.contrastive().validate()?;
        if self.steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("n_samples must be at least 2"));
        }
        if self.ray_batch == 0 {
            return Err(Error::invalid("ray_batch must be at least 1"));
        }
        if self.resolution < 2 || self.n_channels == 0 {
            return Err(Error::invalid("resolution must be >= 2 and n_channels >= 1"));
        }
        if !(self.learning_rate > 0.0) || !(self.sdf_learning_rate > 0.0) || !(self.bounds_half_extent > 0.0) {
            return Err(Error::invalid("learning rate and bounds must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if self.lambda_eik < 0.0 || self.lambda_mask < 0.0 {
            return Err(Error::invalid("loss weights must be non-negative"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("train config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("train config serializes")
    }
}
