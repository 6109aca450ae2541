use std::collections::HashMap;

use super::mesh::LabeledMesh;
use super::tables::{EDGE_TABLE, TRI_TABLE};
use crate::field::FieldModel;
use crate::geom::Vec3;

/// Cube corners as (dx, dy, dz).
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Scalar samples on a regular lattice of `n^3` points, x fastest.
#[derive(Debug, Clone, Copy)]
pub struct ScalarGrid<'a> {
    pub values: &'a [f64],
    pub n: usize,
    pub origin: Vec3,
    pub spacing: Vec3,
}

impl ScalarGrid<'_> {
    fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.n * (y + self.n * z)
    }

    fn position(&self, i: usize) -> Vec3 {
        let x = i % self.n;
        let y = (i / self.n) % self.n;
        let z = i / (self.n * self.n);
        self.origin + Vec3::new(x as f64, y as f64, z as f64).component_mul(&self.spacing)
    }
}

/// Marching cubes at level `iso`. Samples below `iso` are inside; triangles
/// face towards larger values. Vertices shared between cells are welded, and
/// a crossing that lands exactly on a sample is welded to that sample, so
/// collapsed triangles are dropped without opening the surface.
pub fn marching_cubes(grid: &ScalarGrid<'_>, iso: f64) -> LabeledMesh {
    let n = grid.n;
    assert_eq!(grid.values.len(), n * n * n, "grid size mismatch");
    let mut mesh = LabeledMesh::default();
    if n < 2 {
        return mesh;
    }
    let mut welded: HashMap<u64, u32> = HashMap::new();
    let mut vertex_for = |a: usize, b: usize, mesh: &mut LabeledMesh| -> u32 {
        let (fa, fb) = (grid.values[a], grid.values[b]);
        let t = (iso - fa) / (fb - fa);
        let key = if t <= 0.0 {
            4 * a as u64 + 3
        } else if t >= 1.0 {
            4 * b as u64 + 3
        } else {
            let lo = a.min(b);
            let axis = match a.abs_diff(b) {
                1 => 0,
                d if d == n => 1,
                _ => 2,
            };
            4 * lo as u64 + axis
        };
        *welded.entry(key).or_insert_with(|| {
            let p = if t <= 0.0 {
                grid.position(a)
            } else if t >= 1.0 {
                grid.position(b)
            } else {
                grid.position(a).lerp(&grid.position(b), t)
            };
            mesh.vertices.push(p);
            (mesh.vertices.len() - 1) as u32
        })
    };

    let mut corner_idx = [0usize; 8];
    let mut edge_vertex = [0u32; 12];
    for z in 0..n - 1 {
        for y in 0..n - 1 {
            for x in 0..n - 1 {
                let mut case = 0usize;
                for (k, c) in CORNERS.iter().enumerate() {
                    let i = grid.index(x + c[0], y + c[1], z + c[2]);
                    corner_idx[k] = i;
                    if grid.values[i] < iso {
                        case |= 1 << k;
                    }
                }
                let edges = EDGE_TABLE[case];
                if edges == 0 {
                    continue;
                }
                for (e, [a, b]) in EDGES.iter().enumerate() {
                    if edges & (1 << e) != 0 {
                        edge_vertex[e] = vertex_for(corner_idx[*a], corner_idx[*b], &mut mesh);
                    }
                }
                for tri in TRI_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
                    let [a, b, c] = [0, 1, 2].map(|k| edge_vertex[tri[k] as usize]);
                    if a == b || b == c || a == c {
                        continue;
                    }
                    // The table winds triangles clockwise seen from outside.
                    mesh.triangles.push([a, c, b]);
                }
            }
        }
    }
    mesh.vertex_labels = vec![-1; mesh.vertices.len()];
    mesh.drop_unreferenced();
    mesh
}

/// Components below this fraction of the extracted vertices are dropped.
pub const MIN_COMPONENT_FRACTION: f64 = 0.01;

/// Mesh of the zero level (or `iso`) of the model's SDF grid, without
/// components smaller than [`MIN_COMPONENT_FRACTION`]. Features are left
/// empty; see [`attach_features`](super::attach_features).
pub fn extract_mesh(model: &FieldModel, iso: f64) -> LabeledMesh {
    let n = model.corners_per_axis();
    let values: Vec<f64> = (0..model.corner_count()).map(|i| model.corner_sdf(i)).collect();
    let grid = ScalarGrid {
        values: &values,
        n,
        origin: model.bounds().min,
        spacing: model.cell_size(),
    };
    let mut mesh = marching_cubes(&grid, iso);
    if mesh.is_empty() {
        log::warn!("SDF grid has no sign change at level {iso}; mesh is empty");
    }
    let removed = mesh.remove_small_components(MIN_COMPONENT_FRACTION);
    if removed > 0 {
        log::info!("dropped {removed} small mesh components");
    }
    mesh
}

/// Samples `sdf` on an `(resolution + 1)^3` lattice over `bounds` and meshes its zero level.
pub fn mesh_from_sdf(
    sdf: impl Fn(&Vec3) -> f64 + Sync,
    bounds: &crate::geom::Aabb,
    resolution: usize,
) -> LabeledMesh {
    use rayon::prelude::*;
    let n = resolution + 1;
    let spacing = bounds.extent() / resolution as f64;
    let origin = bounds.min;
    let values: Vec<f64> = (0..n * n * n)
        .into_par_iter()
        .map(|i| {
            let p = origin
                + Vec3::new((i % n) as f64, ((i / n) % n) as f64, (i / (n * n)) as f64).component_mul(&spacing);
            sdf(&p)
        })
        .collect();
    marching_cubes(
        &ScalarGrid {
            values: &values,
            n,
            origin,
            spacing,
        },
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldInit;
    use crate::geom::Aabb;
    use proptest::prelude::*;

    fn sphere_model(res: usize) -> FieldModel {
        let mut m = FieldModel::new(&FieldInit {
            resolution: res,
            n_channels: 2,
            ..FieldInit::default()
        })
        .unwrap();
        m.fill_sdf(|p| p.norm() - 0.5);
        m
    }

    #[test]
    fn sphere_is_closed_genus_zero_and_accurate() {
        let m = sphere_model(32);
        let mesh = extract_mesh(&m, 0.0);
        assert!(!mesh.is_empty());
        assert!(mesh.is_watertight());
        assert!(mesh.is_consistently_oriented());
        assert_eq!(mesh.euler_characteristic(), 2);
        let cell = m.cell_size().x;
        let worst = mesh.vertices.iter().map(|v| (v.norm() - 0.5).abs()).fold(0.0, f64::max);
        assert!(worst < 1.5 * cell, "{worst}");
    }

    #[test]
    fn normals_point_to_positive_sdf() {
        let mesh = extract_mesh(&sphere_model(16), 0.0);
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
            let normal = (b - a).cross(&(c - a));
            let centroid = (a + b + c) / 3.0;
            assert!(normal.dot(&centroid) > 0.0);
        }
    }

    #[test]
    fn all_positive_grid_gives_empty_mesh() {
        let mut m = sphere_model(8);
        m.fill_sdf(|_| 1.0);
        assert!(extract_mesh(&m, 0.0).is_empty());
    }

    #[test]
    fn vertex_order_is_deterministic() {
        let m = sphere_model(12);
        assert_eq!(extract_mesh(&m, 0.0), extract_mesh(&m, 0.0));
    }

    #[test]
    fn exact_zero_samples_stay_closed() {
        // A plane through lattice points puts many samples exactly on the surface.
        let mesh = mesh_from_sdf(|p| (p.norm() - 0.5).max(p.y - 0.25), &Aabb::cube(1.0), 16);
        assert!(mesh.is_watertight());
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_fields_give_closed_oriented_meshes(values in proptest::collection::vec(-1.0f64..1.0, 6 * 6 * 6)) {
            // Pad with a positive shell so every component closes inside the lattice.
            let n = 8;
            let mut padded = vec![1.0; n * n * n];
            for z in 0..6 {
                for y in 0..6 {
                    for x in 0..6 {
                        padded[(x + 1) + n * ((y + 1) + n * (z + 1))] = values[x + 6 * (y + 6 * z)];
                    }
                }
            }
            let mesh = marching_cubes(&ScalarGrid { values: &padded, n, origin: Vec3::zeros(), spacing: Vec3::repeat(1.0) }, 0.0);
            prop_assert!(mesh.triangles.iter().all(|t| t.iter().all(|&i| (i as usize) < mesh.vertices.len())));
            prop_assert!(mesh.is_watertight());
            prop_assert!(mesh.is_consistently_oriented());
        }
    }
}
