//! Trainable implicit model on dense trilinear grids and its volume renderer.
//!
//! Every grid corner stores one signed distance, `n_channels` part-feature
//! values and three raw color values, interleaved so that one corner is one
//! contiguous run of [`FieldModel::stride`] floats. Rendering converts SDF
//! samples to opacities with the logistic-CDF rule and composites color,
//! feature and depth; [`backward`] propagates gradients of any loss on the
//! ray outputs back to the corners and to the sharpness parameter.

mod backward;
mod checkpoint;
mod grid;
mod render;

pub use backward::{backward, Gradients, OutputGrad, WeightMode};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use grid::{FieldInit, FieldModel, FieldSample, Trilinear};
pub use render::{
    render_depth_map, render_ray, render_ray_into, RayOutput, RaySample, RayTape, DEPTH_EPS,
};
