use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geom::{closest_point_on_triangle, Aabb, Vec3};
use crate::meshing::LabeledMesh;
use crate::scene::Scene;

/// Chamfer value reported for an empty prediction.
pub const CHAMFER_EMPTY: f64 = f64::INFINITY;

/// Uniform grid over triangle bounding boxes for nearest-triangle queries.
pub struct TriangleIndex<'a> {
    mesh: &'a LabeledMesh,
    bounds: Aabb,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl<'a> TriangleIndex<'a> {
    /// Builds the index with about two triangles per cell on average. `None`
    /// for a mesh without triangles.
    pub fn new(mesh: &'a LabeledMesh) -> Option<Self> {
        if mesh.triangles.is_empty() {
            return None;
        }
        let bounds = mesh.bounds();
        let ext = bounds.extent();
        let volume = ext.x.max(1e-9) * ext.y.max(1e-9) * ext.z.max(1e-9);
        let target = (mesh.triangles.len() as f64 / 2.0).max(1.0);
        let mut cell = (volume / target).cbrt();
        cell = cell.max(1e-3 * ext.max().max(1e-9));
        let dims = [0, 1, 2].map(|a| ((ext[a] / cell).ceil() as usize).clamp(1, 256));
        let mut cells = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let mut index = Self {
            mesh,
            bounds,
            cell,
            dims,
            cells: Vec::new(),
        };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut lo = [usize::MAX; 3];
            let mut hi = [0usize; 3];
            for &v in tri {
                let c = index.cell_of(&mesh.vertices[v as usize]);
                for a in 0..3 {
                    lo[a] = lo[a].min(c[a]);
                    hi[a] = hi[a].max(c[a]);
                }
            }
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        cells[index.flat([x, y, z])].push(t as u32);
                    }
                }
            }
        }
        index.cells = cells;
        Some(index)
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let g = ((p[a] - self.bounds.min[a]) / self.cell).floor();
            (g.max(0.0) as usize).min(self.dims[a] - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Distance from `p` to the nearest triangle.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let q = self.bounds.clamp(p);
        let outside = (p - q).norm();
        let center = self.cell_of(&q);
        let max_ring = self.dims.iter().copied().max().unwrap_or(1);
        let mut best = f64::INFINITY;
        for r in 0..=max_ring {
            // cells in ring r and beyond are at least (r - 1) cells from q, and q is
            // the projection of p onto the (convex) bounds
            if r > 0 {
                let gap = (r - 1) as f64 * self.cell;
                if best <= (outside * outside + gap * gap).sqrt() {
                    break;
                }
            }
            self.visit_ring(center, r, |t| {
                let [a, b, c] = self.mesh.triangle(t as usize);
                let d = (closest_point_on_triangle(p, &a, &b, &c) - p).norm();
                if d < best {
                    best = d;
                }
            });
        }
        best
    }

    fn visit_ring(&self, center: [usize; 3], r: usize, mut f: impl FnMut(u32)) {
        let r = r as isize;
        let lo = center.map(|c| c as isize - r);
        let hi = center.map(|c| c as isize + r);
        for z in lo[2].max(0)..=hi[2].min(self.dims[2] as isize - 1) {
            for y in lo[1].max(0)..=hi[1].min(self.dims[1] as isize - 1) {
                for x in lo[0].max(0)..=hi[0].min(self.dims[0] as isize - 1) {
                    let on_shell = x == lo[0] || x == hi[0] || y == lo[1] || y == hi[1] || z == lo[2] || z == hi[2];
                    if !on_shell {
                        continue;
                    }
                    for &t in &self.cells[self.flat([x as usize, y as usize, z as usize])] {
                        f(t);
                    }
                }
            }
        }
    }
}

/// Symmetric Chamfer distance: the mean of the two one-sided means over
/// `n_samples` area-weighted surface samples of each shape. Predicted samples
/// are scored by `|scene_sdf|`, ground-truth samples by point-to-triangle
/// distance. An empty mesh gives [`CHAMFER_EMPTY`].
pub fn chamfer_distance(mesh: &LabeledMesh, scene: &Scene, n_samples: usize, seed: u64) -> f64 {
    let Some(index) = TriangleIndex::new(mesh) else {
        return CHAMFER_EMPTY;
    };
    if n_samples == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pred = mesh.sample_surface(n_samples, &mut rng);
    rng.set_stream(1);
    let gt = scene.sample_surface(n_samples, &mut rng);
    let to_gt = ordered_mean(pred.par_iter().map(|p| scene.distance(p).abs()).collect());
    let to_pred = ordered_mean(gt.par_iter().map(|p| index.distance(p)).collect());
    0.5 * (to_gt + to_pred)
}

/// Mean with a fixed summation order, so results do not depend on the thread count.
fn ordered_mean(values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}
