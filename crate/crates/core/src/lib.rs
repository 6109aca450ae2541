//! Part-aware surface reconstruction.
//!
//! The crate reconstructs a part-segmented triangle mesh from calibrated
//! multiview color images and per-view segmentation masks whose IDs carry no
//! meaning across views. A signed-distance grid and a part-feature grid are
//! optimized jointly by differentiable volume rendering; the feature grid is
//! trained contrastively so that pixels from one mask render to similar
//! features. After training, the part count is estimated from a mask
//! correspondence graph built by depth reprojection, mesh vertex features are
//! clustered, and the clustering with the best Davies-Bouldin score wins.
//!
//! The stages live in separate modules:
//!
//! - [`scene`]: labeled primitive scenes, camera rigs, ground-truth renders,
//!   mask perturbation and the on-disk dataset layout.
//! - [`field`]: the trainable grid model, volume rendering and its backward pass.
//! - [`training`]: contrastive sampling, losses and the optimization loop.
//! - [`meshing`]: marching cubes, per-vertex features, PLY/OBJ export.
//! - [`partcount`]: mask reprojection, the overlap graph and seed points.
//! - [`segmentation`]: k-means, Davies-Bouldin selection and connectivity splitting.
//! - [`evaluation`]: Chamfer distance, volume IoU and matched label accuracy.
//! - [`cli`]: the end-to-end commands behind the `partfield` binary.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod field;
pub mod geom;
pub mod image;
pub mod meshing;
pub mod partcount;
pub mod scene;
pub mod segmentation;
pub mod training;

pub use error::{Error, Result};
