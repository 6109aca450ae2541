//! Contrastive part-feature learning jointly with surface reconstruction.
//!
//! Each step renders a batch of random pixels for the reconstruction loss
//! (L1 color, eikonal regularizer on the SDF grid, foreground BCE) and a batch
//! of query/positive/negative pixel tuples drawn from the view-local masks for
//! the InfoNCE loss. Masks enter only through same-mask / different-mask tests
//! inside one view, so the loss is blind to mask IDs.

mod config;
mod contrastive;
mod loss;
mod optim;
mod trainer;

pub use config::{ContrastiveConfig, OptimizerKind, TrainConfig};
pub use contrastive::{
    info_nce, info_nce_with_grad, sample_contrastive_batch, ContrastiveBatch, ContrastiveTuple,
    InfoNceGrad, MaskIndex,
};
pub use loss::{
    eikonal_term, reconstruction_loss, PixelRay, RecLossTerms, RecWeights,
};
pub use optim::{LearningRates, Optimizer};
pub use trainer::{color_error, pixel_ray, train, train_from, LossRecord, TrainOutcome};
