//! Geometry and segmentation metrics against an analytic scene.
//!
//! Chamfer distance mixes exact scene distances with point-to-triangle
//! queries; volume IoU compares SDF-sign occupancy with mesh winding numbers
//! on a shared lattice; label accuracy matches labels by optimal assignment.

mod accuracy;
mod chamfer;
mod iou;
mod report;

pub use accuracy::{confusion_matrix, ground_truth_labels, label_accuracy};
pub use chamfer::{chamfer_distance, TriangleIndex, CHAMFER_EMPTY};
pub use iou::{mesh_occupancy, occupancy_iou, scene_occupancy, volume_iou, winding_numbers, Lattice};
pub use report::{evaluate, EvalConfig, EvalReport};
