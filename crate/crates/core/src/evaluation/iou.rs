use rayon::prelude::*;

use crate::geom::{Aabb, Vec3};
use crate::meshing::LabeledMesh;
use crate::scene::Scene;

/// Cell-centered `res`³ lattice over a box. Point `(i, j, k)` has flat index
/// `(k * res + j) * res + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub bounds: Aabb,
    pub res: usize,
}

impl Lattice {
    pub fn new(bounds: Aabb, res: usize) -> Self {
        assert!(res > 0, "lattice resolution must be positive");
        Self { bounds, res }
    }

    /// Lattice over both shapes' bounds, padded by 2% of the diagonal.
    pub fn covering(scene: &Scene, mesh: &LabeledMesh, res: usize) -> Self {
        let mut b = scene.bounds;
        if !mesh.is_empty() {
            b = b.union(&mesh.bounds());
        }
        Self::new(b.padded(0.02 * b.diagonal()), res)
    }

    pub fn len(&self) -> usize {
        self.res * self.res * self.res
    }

    pub fn is_empty(&self) -> bool {
        self.res == 0
    }

    pub fn spacing(&self) -> Vec3 {
        self.bounds.extent() / self.res as f64
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.bounds.min[axis] + (i as f64 + 0.5) * self.spacing()[axis]
    }

    pub fn point(&self, index: usize) -> Vec3 {
        let n = self.res;
        let (i, j, k) = (index % n, (index / n) % n, index / (n * n));
        Vec3::new(self.coordinate(0, i), self.coordinate(1, j), self.coordinate(2, k))
    }

    fn flat(&self, ijk: [usize; 3]) -> usize {
        (ijk[2] * self.res + ijk[1]) * self.res + ijk[0]
    }
}

/// Inside test by the sign of the scene SDF.
pub fn scene_occupancy(scene: &Scene, lattice: &Lattice) -> Vec<bool> {
    (0..lattice.len())
        .into_par_iter()
        .map(|i| scene.distance(&lattice.point(i)) < 0.0)
        .collect()
}

/// Top-left fill rule for a counter-clockwise edge `a -> b`.
fn owns_edge(a: [f64; 2], b: [f64; 2]) -> bool {
    b[1] < a[1] || (a[1] == b[1] && b[0] < a[0])
}

fn edge_fn(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Signed crossings of every lattice line parallel to `axis`: per line, the
/// position along the axis and the sign of the triangle normal's component
/// along it.
fn axis_crossings(mesh: &LabeledMesh, lattice: &Lattice, axis: usize) -> Vec<Vec<(f64, i32)>> {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let n = lattice.res;
    let h = lattice.spacing();
    let mut lines = vec![Vec::new(); n * n];
    for tri in &mesh.triangles {
        let p = tri.map(|i| mesh.vertices[i as usize]);
        let mut q = p.map(|x| [x[u], x[v]]);
        let mut along = p.map(|x| x[axis]);
        let area2 = edge_fn(q[0], q[1], q[2]);
        if area2 == 0.0 {
            continue;
        }
        let sign = if area2 > 0.0 { 1 } else { -1 };
        if sign < 0 {
            q.swap(1, 2);
            along.swap(1, 2);
        }
        let lo = |c: usize| q.iter().map(|x| x[c]).fold(f64::INFINITY, f64::min);
        let hi = |c: usize| q.iter().map(|x| x[c]).fold(f64::NEG_INFINITY, f64::max);
        let range = |c: usize, axis: usize| {
            let first = ((lo(c) - lattice.bounds.min[axis]) / h[axis] - 0.5).ceil().max(0.0) as usize;
            let last = ((hi(c) - lattice.bounds.min[axis]) / h[axis] - 0.5).floor();
            (first, if last < 0.0 { None } else { Some((last as usize).min(n - 1)) })
        };
        let (iu0, iu1) = range(0, u);
        let (iv0, iv1) = range(1, v);
        let (Some(iu1), Some(iv1)) = (iu1, iv1) else {
            continue;
        };
        for iv in iv0..=iv1 {
            for iu in iu0..=iu1 {
                let pt = [lattice.coordinate(u, iu), lattice.coordinate(v, iv)];
                let mut w = [0.0; 3];
                let mut inside = true;
                for k in 0..3 {
                    let (a, b) = (q[(k + 1) % 3], q[(k + 2) % 3]);
                    w[k] = edge_fn(a, b, pt);
                    if !(w[k] > 0.0 || (w[k] == 0.0 && owns_edge(a, b))) {
                        inside = false;
                        break;
                    }
                }
                if !inside {
                    continue;
                }
                let total = w[0] + w[1] + w[2];
                let t = (w[0] * along[0] + w[1] * along[1] + w[2] * along[2]) / total;
                lines[iv * n + iu].push((t, sign));
            }
        }
    }
    lines
}

/// Winding number of the mesh at every lattice point, estimated as the mean
/// signed crossing count of rays cast along the six axis directions. Exact
/// for closed, consistently oriented meshes; for open meshes it averages the
/// directions the generalized winding number integrates over.
pub fn winding_numbers(mesh: &LabeledMesh, lattice: &Lattice) -> Vec<f64> {
    let n = lattice.res;
    let mut sum = vec![0.0; lattice.len()];
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut lines = axis_crossings(mesh, lattice, axis);
        for (line, crossings) in lines.iter_mut().enumerate() {
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let total: i32 = crossings.iter().map(|c| c.1).sum();
            let (iu, iv) = (line % n, line / n);
            let mut below = 0i32;
            let mut next = 0;
            for k in 0..n {
                let x = lattice.coordinate(axis, k);
                while next < crossings.len() && crossings[next].0 < x {
                    below += crossings[next].1;
                    next += 1;
                }
                let mut at = 0;
                let mut j = next;
                while j < crossings.len() && crossings[j].0 == x {
                    at += crossings[j].1;
                    j += 1;
                }
                let above = total - below - at;
                // +axis ray counts crossings above, -axis ray those below, with flipped sign
                let w = 0.5 * (above - below) as f64;
                let mut ijk = [0; 3];
                ijk[axis] = k;
                ijk[u] = iu;
                ijk[v] = iv;
                sum[lattice.flat(ijk)] += w;
            }
        }
    }
    sum.iter_mut().for_each(|w| *w /= 3.0);
    sum
}

/// Inside test by winding number above one half. Warns on open meshes.
pub fn mesh_occupancy(mesh: &LabeledMesh, lattice: &Lattice) -> Vec<bool> {
    if !mesh.is_empty() && !mesh.is_watertight() {
        log::warn!("mesh is not watertight; occupancy uses averaged winding numbers");
    }
    winding_numbers(mesh, lattice).into_iter().map(|w| w > 0.5).collect()
}

/// `|A ∩ B| / |A ∪ B|`, or 0 for an empty union.
pub fn occupancy_iou(a: &[bool], b: &[bool]) -> f64 {
    assert_eq!(a.len(), b.len(), "occupancy grids differ in size");
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Volume IoU of the mesh against the scene on a `grid_res`³ lattice covering both.
pub fn volume_iou(mesh: &LabeledMesh, scene: &Scene, grid_res: usize) -> f64 {
    let lattice = Lattice::covering(scene, mesh, grid_res);
    occupancy_iou(&mesh_occupancy(mesh, &lattice), &scene_occupancy(scene, &lattice))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshing::mesh_from_sdf;
    use crate::scene::{Pose, Primitive, PrimitiveKind};

    fn box_scene(center: Vec3, half: Vec3) -> Scene {
        let prim = Primitive::new(
            PrimitiveKind::Box,
            Pose::from_translation(center),
            vec![half.x, half.y, half.z],
            0,
            [0.5; 3],
        )
        .unwrap();
        Scene::new("box", vec![prim]).unwrap()
    }

    /// Closed box with outward normals.
    fn box_mesh(min: Vec3, max: Vec3) -> LabeledMesh {
        let vertices: Vec<Vec3> = (0..8)
            .map(|k| {
                Vec3::new(
                    if k & 1 != 0 { max.x } else { min.x },
                    if k & 2 != 0 { max.y } else { min.y },
                    if k & 4 != 0 { max.z } else { min.z },
                )
            })
            .collect();
        let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        LabeledMesh {
            vertex_labels: vec![0; 8],
            vertices,
            triangles,
            vertex_features: Vec::new(),
        }
    }

    /// Brute-force generalized winding number from triangle solid angles.
    fn solid_angle_winding(mesh: &LabeledMesh, p: &Vec3) -> f64 {
        let mut total = 0.0;
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangle(t).map(|x| x - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * std::f64::consts::PI)
    }

    #[test]
    fn box_mesh_is_closed_and_outward() {
        let m = box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        assert!(m.is_watertight());
        assert!(m.is_consistently_oriented());
        assert!((solid_angle_winding(&m, &Vec3::repeat(0.5)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_mesh_winding_matches_solid_angles() {
        let mesh = mesh_from_sdf(|p| p.norm() - 0.6, &Aabb::cube(1.0), 10);
        let lattice = Lattice::new(Aabb::cube(1.0), 9);
        let w = winding_numbers(&mesh, &lattice);
        for (i, wi) in w.iter().enumerate() {
            let exact = solid_angle_winding(&mesh, &lattice.point(i));
            assert!((wi - exact).abs() < 1e-6, "point {i}: {wi} vs {exact}");
        }
    }

    #[test]
    fn open_mesh_still_classifies_deep_interior() {
        let mut mesh = mesh_from_sdf(|p| p.norm() - 0.7, &Aabb::cube(1.0), 20);
        mesh.triangles.truncate(mesh.triangles.len() - 10);
        assert!(!mesh.is_watertight());
        let lattice = Lattice::new(Aabb::cube(1.0), 8);
        let occ = mesh_occupancy(&mesh, &lattice);
        for (i, o) in occ.iter().enumerate() {
            let r = lattice.point(i).norm();
            if r < 0.4 {
                assert!(o);
            } else if r > 0.9 {
                assert!(!o);
            }
        }
    }

    #[test]
    fn identical_shapes_give_one() {
        let scene = box_scene(Vec3::repeat(0.5), Vec3::repeat(0.5));
        let mesh = box_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        // lattice points never sit on the faces here, so both tests agree exactly
        assert_eq!(volume_iou(&mesh, &scene, 40), 1.0);
    }

    #[test]
    fn disjoint_shapes_give_zero() {
        let scene = box_scene(Vec3::repeat(0.5), Vec3::repeat(0.5));
        let mesh = box_mesh(Vec3::repeat(2.0), Vec3::repeat(3.0));
        assert_eq!(volume_iou(&mesh, &scene, 32), 0.0);
    }

    #[test]
    fn half_overlapping_cubes_give_one_third() {
        let scene = box_scene(Vec3::repeat(0.5), Vec3::repeat(0.5));
        let mesh = box_mesh(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0));
        let res = 64;
        let iou = volume_iou(&mesh, &scene, res);
        let lattice = Lattice::covering(&scene, &mesh, res);
        // one lattice cell of boundary shift moves each volume by at most h / 1 along x
        let tol = 2.0 * lattice.spacing().x;
        assert!((iou - 1.0 / 3.0).abs() < tol, "iou {iou}");
    }

    #[test]
    fn occupancy_iou_is_symmetric_and_empty_union_is_zero() {
        let a = [true, false, true, true, false];
        let b = [true, true, false, true, false];
        assert_eq!(occupancy_iou(&a, &b), occupancy_iou(&b, &a));
        assert_eq!(occupancy_iou(&a, &b), 0.5);
        assert_eq!(occupancy_iou(&[false; 4], &[false; 4]), 0.0);
    }

    #[test]
    fn empty_mesh_gives_zero() {
        let scene = box_scene(Vec3::zeros(), Vec3::repeat(0.5));
        assert_eq!(volume_iou(&LabeledMesh::default(), &scene, 16), 0.0);
    }
}
