use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// Initialization settings for a fresh model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldInit {
    /// Cells per axis; the grid has `resolution + 1` corners per axis.
    pub resolution: usize,
    pub n_channels: usize,
    pub bounds: Aabb,
    /// Initial SDF sphere radius as a fraction of the bounds half-extent.
    pub sphere_radius_frac: f64,
    /// Features start uniform in `[-feature_noise, feature_noise]`.
    pub feature_noise: f64,
    pub inv_std: f64,
    pub seed: u64,
}

impl Default for FieldInit {
    fn default() -> Self {
        Self {
            resolution: 64,
            n_channels: 8,
            bounds: Aabb::cube(1.0),
            sphere_radius_frac: 0.5,
            feature_noise: 1e-2,
            inv_std: 10.0,
            seed: 0,
        }
    }
}

/// Trilinear stencil of a point: the lowest corner and the eight corner weights.
/// Corner `k` sits at offset `(k & 1, (k >> 1) & 1, (k >> 2) & 1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Trilinear {
    pub base: usize,
    pub weights: [f64; 8],
    pub frac: [f64; 3],
}

/// Values of all fields at one point. Color is squashed to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub sdf: f64,
    pub feature: Vec<f64>,
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    resolution: usize,
    n_channels: usize,
    bounds: Aabb,
    cell: Vec3,
    offsets: [usize; 8],
    params: Vec<f64>,
    log_inv_std: f64,
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl FieldModel {
    /// Model with every parameter zero and `inv_std = 1`.
    pub fn zeros(resolution: usize, n_channels: usize, bounds: Aabb) -> Result<Self> {
        if resolution < 1 {
            return Err(Error::invalid("resolution must be at least 1"));
        }
        if bounds.is_empty() || (0..3).any(|i| bounds.extent()[i] <= 0.0) {
            return Err(Error::invalid("model bounds must have positive extent"));
        }
        let n = resolution + 1;
        let stride = 4 + n_channels;
        let offsets = [0, 1, n, n + 1, n * n, n * n + 1, n * n + n, n * n + n + 1];
        Ok(Self {
            resolution,
            n_channels,
            bounds,
            cell: bounds.extent() / resolution as f64,
            offsets,
            params: vec![0.0; n * n * n * stride],
            log_inv_std: 0.0,
        })
    }

    /// Sphere SDF, seeded feature noise, gray color.
    pub fn new(init: &FieldInit) -> Result<Self> {
        let mut m = Self::zeros(init.resolution, init.n_channels, init.bounds)?;
        if !(init.inv_std > 0.0) {
            return Err(Error::invalid("inv_std must be positive"));
        }
        m.log_inv_std = init.inv_std.ln();
        let half = init.bounds.extent().min() / 2.0;
        let radius = init.sphere_radius_frac * half;
        let center = init.bounds.center();
        let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
        let n = m.corners_per_axis();
        let stride = m.stride();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let idx = m.corner_index(x, y, z);
                    let p = m.corner_position(x, y, z);
                    let base = idx * stride;
                    m.params[base] = (p - center).norm() - radius;
                    for c in 0..init.n_channels {
                        m.params[base + 1 + c] =
                            (rng.random::<f64>() * 2.0 - 1.0) * init.feature_noise;
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn corners_per_axis(&self) -> usize {
        self.resolution + 1
    }

    pub fn corner_count(&self) -> usize {
        self.corners_per_axis().pow(3)
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Floats per corner: sdf, features, three raw colors.
    pub fn stride(&self) -> usize {
        4 + self.n_channels
    }

    pub fn color_offset(&self) -> usize {
        1 + self.n_channels
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    /// Cell edge lengths per axis.
    pub fn cell_size(&self) -> Vec3 {
        self.cell
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn inv_std(&self) -> f64 {
        self.log_inv_std.exp()
    }

    /// Unconstrained sharpness parameter; `inv_std = exp(log_inv_std)`.
    pub fn log_inv_std(&self) -> f64 {
        self.log_inv_std
    }

    pub fn set_log_inv_std(&mut self, v: f64) {
        self.log_inv_std = v;
    }

    #[inline]
    pub fn corner_index(&self, x: usize, y: usize, z: usize) -> usize {
        let n = self.corners_per_axis();
        x + n * (y + n * z)
    }

    pub fn corner_coords(&self, index: usize) -> (usize, usize, usize) {
        let n = self.corners_per_axis();
        (index % n, (index / n) % n, index / (n * n))
    }

    pub fn corner_position(&self, x: usize, y: usize, z: usize) -> Vec3 {
        self.bounds.min + Vec3::new(x as f64, y as f64, z as f64).component_mul(&self.cell)
    }

    pub fn corner_sdf(&self, index: usize) -> f64 {
        self.params[index * self.stride()]
    }

    pub fn set_corner_sdf(&mut self, index: usize, v: f64) {
        let s = self.stride();
        self.params[index * s] = v;
    }

    pub fn corner_feature(&self, index: usize) -> &[f64] {
        let s = self.stride();
        &self.params[index * s + 1..index * s + 1 + self.n_channels]
    }

    pub fn corner_feature_mut(&mut self, index: usize) -> &mut [f64] {
        let s = self.stride();
        let nc = self.n_channels;
        &mut self.params[index * s + 1..index * s + 1 + nc]
    }

    pub fn corner_color_raw_mut(&mut self, index: usize) -> &mut [f64] {
        let s = self.stride();
        let off = self.color_offset();
        &mut self.params[index * s + off..index * s + off + 3]
    }

    /// Sets every corner SDF from a function of the corner position.
    pub fn fill_sdf(&mut self, f: impl Fn(&Vec3) -> f64) {
        let n = self.corners_per_axis();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let i = self.corner_index(x, y, z);
                    let p = self.corner_position(x, y, z);
                    self.set_corner_sdf(i, f(&p));
                }
            }
        }
    }

    /// Trilinear stencil of `p`, clamped into the bounds.
    #[inline]
    pub fn locate(&self, p: &Vec3) -> Trilinear {
        let mut cell = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let g = ((p[a] - self.bounds.min[a]) / self.cell[a]).clamp(0.0, self.resolution as f64);
            let i = (g.floor() as usize).min(self.resolution - 1);
            cell[a] = i;
            frac[a] = g - i as f64;
        }
        let [fx, fy, fz] = frac;
        let (gx, gy, gz) = (1.0 - fx, 1.0 - fy, 1.0 - fz);
        let weights = [
            gx * gy * gz,
            fx * gy * gz,
            gx * fy * gz,
            fx * fy * gz,
            gx * gy * fz,
            fx * gy * fz,
            gx * fy * fz,
            fx * fy * fz,
        ];
        Trilinear {
            base: self.corner_index(cell[0], cell[1], cell[2]),
            weights,
            frac,
        }
    }

    /// Interpolates all `stride()` raw channels into `out`.
    #[inline]
    pub(crate) fn interpolate_into(&self, tri: &Trilinear, out: &mut [f64]) {
        let s = self.stride();
        out[..s].fill(0.0);
        for k in 0..8 {
            let w = tri.weights[k];
            let base = (tri.base + self.offsets[k]) * s;
            for (o, v) in out[..s].iter_mut().zip(&self.params[base..base + s]) {
                *o += w * v;
            }
        }
    }

    #[inline]
    pub(crate) fn scatter(&self, tri: &Trilinear, grad: &[f64], into: &mut [f64]) {
        let s = self.stride();
        for k in 0..8 {
            let w = tri.weights[k];
            if w == 0.0 {
                continue;
            }
            let base = (tri.base + self.offsets[k]) * s;
            for (o, g) in into[base..base + s].iter_mut().zip(grad) {
                *o += w * g;
            }
        }
    }

    pub fn sdf_at(&self, p: &Vec3) -> f64 {
        let tri = self.locate(p);
        let s = self.stride();
        (0..8)
            .map(|k| tri.weights[k] * self.params[(tri.base + self.offsets[k]) * s])
            .sum()
    }

    /// Interpolated SDF, feature and squashed color at `p` (clamped into the bounds).
    pub fn field_at(&self, p: &Vec3) -> FieldSample {
        let tri = self.locate(p);
        let mut raw = vec![0.0; self.stride()];
        self.interpolate_into(&tri, &mut raw);
        let off = self.color_offset();
        FieldSample {
            sdf: raw[0],
            feature: raw[1..off].to_vec(),
            color: [sigmoid(raw[off]), sigmoid(raw[off + 1]), sigmoid(raw[off + 2])],
        }
    }

    /// Analytic gradient of the interpolated SDF inside the cell containing `p`.
    /// Corner indices of the cell holding `p` and, per corner, the derivative of
    /// the interpolated SDF gradient with respect to that corner's SDF value.
    pub fn sdf_gradient_stencil(&self, p: &Vec3) -> ([usize; 8], [[f64; 3]; 8]) {
        let tri = self.locate(p);
        let [fx, fy, fz] = tri.frac;
        let mut idx = [0usize; 8];
        let mut d = [[0.0; 3]; 8];
        for k in 0..8 {
            idx[k] = tri.base + self.offsets[k];
            let (bx, by, bz) = (k & 1 != 0, k & 2 != 0, k & 4 != 0);
            let wx = if bx { fx } else { 1.0 - fx };
            let wy = if by { fy } else { 1.0 - fy };
            let wz = if bz { fz } else { 1.0 - fz };
            let sx = if bx { 1.0 } else { -1.0 };
            let sy = if by { 1.0 } else { -1.0 };
            let sz = if bz { 1.0 } else { -1.0 };
            d[k] = [
                sx * wy * wz / self.cell.x,
                wx * sy * wz / self.cell.y,
                wx * wy * sz / self.cell.z,
            ];
        }
        (idx, d)
    }

    pub fn sdf_gradient(&self, p: &Vec3) -> Vec3 {
        let tri = self.locate(p);
        let s = self.stride();
        let v: Vec<f64> = (0..8)
            .map(|k| self.params[(tri.base + self.offsets[k]) * s])
            .collect();
        let [fx, fy, fz] = tri.frac;
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let dx = lerp(
            lerp(v[1] - v[0], v[3] - v[2], fy),
            lerp(v[5] - v[4], v[7] - v[6], fy),
            fz,
        );
        let dy = lerp(
            lerp(v[2] - v[0], v[3] - v[1], fx),
            lerp(v[6] - v[4], v[7] - v[5], fx),
            fz,
        );
        let dz = lerp(
            lerp(v[4] - v[0], v[5] - v[1], fx),
            lerp(v[6] - v[2], v[7] - v[3], fx),
            fy,
        );
        Vec3::new(dx / self.cell.x, dy / self.cell.y, dz / self.cell.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_model(res: usize, seed: u64) -> FieldModel {
        let mut m = FieldModel::zeros(res, 3, Aabb::cube(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in m.params_mut() {
            *v = rng.random::<f64>() * 2.0 - 1.0;
        }
        m
    }

    #[test]
    fn corner_query_returns_stored_values() {
        let m = random_model(4, 1);
        let idx = m.corner_index(1, 2, 3);
        let s = m.field_at(&m.corner_position(1, 2, 3));
        assert_eq!(s.sdf, m.corner_sdf(idx));
        assert_eq!(s.feature, m.corner_feature(idx));
    }

    #[test]
    fn cell_center_is_mean_of_corners() {
        let m = random_model(4, 2);
        let p = m.corner_position(1, 1, 2) + m.cell_size() * 0.5;
        let mut mean = 0.0;
        for k in 0..8 {
            mean += m.corner_sdf(m.corner_index(1 + (k & 1), 1 + ((k >> 1) & 1), 2 + ((k >> 2) & 1)));
        }
        mean /= 8.0;
        assert!((m.sdf_at(&p) - mean).abs() < 1e-14);
    }

    #[test]
    fn x_derivative_at_face_center_matches_finite_differences() {
        let m = random_model(4, 3);
        let c = m.cell_size();
        // center of the x-facing face of cell (1,1,1) shifted slightly inside the cell
        let p = m.corner_position(1, 1, 1) + Vec3::new(0.25 * c.x, 0.5 * c.y, 0.5 * c.z);
        let h = 1e-6;
        let fd = (m.sdf_at(&(p + Vec3::x() * h)) - m.sdf_at(&(p - Vec3::x() * h))) / (2.0 * h);
        let an = m.sdf_gradient(&p).x;
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "fd {fd} analytic {an}");
    }

    #[test]
    fn linear_along_axes() {
        let m = random_model(3, 4);
        let a = m.corner_position(0, 1, 1);
        let b = m.corner_position(1, 1, 1);
        for t in [0.1, 0.37, 0.8] {
            let p = a + (b - a) * t;
            let expect = m.sdf_at(&a) * (1.0 - t) + m.sdf_at(&b) * t;
            assert!((m.sdf_at(&p) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_init_matches_analytic() {
        let m = FieldModel::new(&FieldInit {
            resolution: 16,
            ..FieldInit::default()
        })
        .unwrap();
        assert!((m.sdf_at(&Vec3::new(0.5, 0.0, 0.0))).abs() < 1e-12);
        assert!((m.inv_std() - 10.0).abs() < 1e-12);
        let f = m.field_at(&Vec3::new(0.1, 0.2, 0.3));
        assert_eq!(f.color, [0.5; 3]);
        assert!(f.feature.iter().all(|v| v.abs() <= 1e-2));
    }

    #[test]
    fn outside_points_are_clamped() {
        let m = random_model(3, 5);
        let inside = m.field_at(&Vec3::new(1.0, 0.2, -0.3));
        let outside = m.field_at(&Vec3::new(4.0, 0.2, -0.3));
        assert_eq!(inside, outside);
    }
}
