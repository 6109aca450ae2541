//! Part labels for mesh vertices: k-means on the attached features, seeded
//! from the mask-graph part count at several thresholds, with the
//! Davies-Bouldin score choosing among thresholds. Only vertices some camera
//! sees are clustered; the rest inherit the nearest visible label.

mod davies_bouldin;
mod kmeans;
mod split;
mod sweep;
mod visibility;

pub use davies_bouldin::davies_bouldin;
pub use kmeans::{distinct_count, farthest_point_init, kmeans, KMeansResult, MAX_ITERATIONS};
pub use split::{canonical_labels, split_connected, MIN_COMPONENT_FRACTION};
pub use sweep::{
    inertia, segment, segment_sweep, Candidate, CenterInit, SegmentationResult, SweepConfig, SweepOutcome, DB_TIE,
    DEFAULT_TAUS,
};
pub use visibility::{propagate_labels, visible_vertices};
