//! Marching-cubes extraction of the SDF zero level and per-vertex part features.

mod io;
mod marching;
mod mesh;
mod tables;

pub use io::{decode_ply, encode_obj, encode_ply, read_ply, write_obj, write_ply};
pub use marching::{extract_mesh, marching_cubes, mesh_from_sdf, ScalarGrid, MIN_COMPONENT_FRACTION};
pub use mesh::{attach_features, LabeledMesh, UNASSIGNED};
