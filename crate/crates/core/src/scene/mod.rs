//! Ground-truth scenes and the multiview dataset they produce.
//!
//! A [`Scene`] is a union of labeled primitives. Rendering it from a
//! [`CameraRig`] yields depth, label and color maps; [`perturb_masks`] turns
//! the label maps into view-local, SAM-like masks whose IDs mean nothing
//! across views. [`dataset`] reads and writes the on-disk layout shared with
//! externally generated images and masks.

mod camera;
pub mod dataset;
mod masks;
mod primitive;
mod render;
mod scene_def;

pub use camera::{make_camera_rig, Camera, CameraRig};
pub use dataset::{load_dataset, write_dataset, Dataset};
pub use masks::{perturb_masks, MaskMap, MaskSet, NoiseConfig, BACKGROUND_MASK};
pub use primitive::{Pose, Primitive, PrimitiveKind};
pub use render::{render_ground_truth, render_rig, ViewRender, BACKGROUND_COLOR, BACKGROUND_LABEL, NO_HIT};
pub use scene_def::{bundled_scene, Scene, BUNDLED_SCENES};
