//! Part count from view-local masks: project masks into the next view with
//! rendered depth, link masks that overlap in both directions, and count the
//! connected components of the resulting graph. Each component also yields a
//! 3D seed for clustering.

mod components;
mod graph;
mod projection;
mod seeds;

pub use components::{connected_components, graph_components, PartEstimate, NOISE_FLOOR};
pub use graph::{neighbor_pairs, overlap_edges, MaskEdge, MaskGraph, MaskVertex, OverlapTable, VISIBILITY_FLOOR};
pub use projection::project_mask;
pub use seeds::{inner_distance_transform, interior_pixel, seed_points};

/// Occlusion tolerance as a share of the scene diameter.
pub const OCCLUSION_TOLERANCE: f64 = 0.02;
