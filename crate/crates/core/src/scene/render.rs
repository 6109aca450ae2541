use rayon::prelude::*;

use super::camera::{Camera, CameraRig};
use super::scene_def::Scene;
use crate::geom::Vec3;
use crate::image::ImageBuf;

/// Depth value for pixels whose ray hits nothing.
pub const NO_HIT: f64 = -1.0;
/// Label value for background pixels.
pub const BACKGROUND_LABEL: i32 = -1;
pub const BACKGROUND_COLOR: [f64; 3] = [1.0, 1.0, 1.0];

const MAX_STEPS: usize = 128;
const HIT_EPS_REL: f64 = 1e-4;
const AMBIENT: f64 = 0.35;

/// Ground-truth render of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRender {
    /// Distance along the unit pixel ray, or [`NO_HIT`].
    pub depth: ImageBuf<f64>,
    /// Part label of the hit primitive, or [`BACKGROUND_LABEL`].
    pub labels: ImageBuf<i32>,
    pub color: ImageBuf<[f64; 3]>,
}

impl ViewRender {
    pub fn foreground_count(&self) -> usize {
        self.labels.data.iter().filter(|l| **l != BACKGROUND_LABEL).count()
    }
}

fn light_dir() -> Vec3 {
    Vec3::new(0.35, 0.85, 0.4).normalize()
}

/// Sphere-traces `(origin, dir)` against the scene. Returns the hit distance and
/// the index of the owning primitive.
pub(crate) fn trace(scene: &Scene, origin: &Vec3, dir: &Vec3) -> Option<(f64, usize)> {
    let bounds = scene.bounds.padded(1e-3 * scene.diameter());
    let (t_near, t_far) = bounds.intersect_ray(origin, dir)?;
    let eps = HIT_EPS_REL * scene.diameter();
    let mut t = t_near;
    for _ in 0..MAX_STEPS {
        let d = scene.distance(&(origin + dir * t));
        if d < eps {
            let t = polish(scene, origin, dir, t);
            let (_, idx) = scene.sdf_with_index(&(origin + dir * t));
            return Some((t, idx));
        }
        t += d;
        if t > t_far {
            return None;
        }
    }
    None
}

/// Newton iterations on the distance along the ray, starting from a
/// sphere-tracing hit. A step is kept only if it shrinks `|f|`, so grazing rays
/// that never reach the surface keep the tracing result.
fn polish(scene: &Scene, origin: &Vec3, dir: &Vec3, t0: f64) -> f64 {
    let f = |t: f64| scene.distance(&(origin + dir * t));
    let h = 1e-7 * scene.diameter();
    let mut t = t0;
    let mut ft = f(t);
    for _ in 0..20 {
        if ft.abs() < 1e-13 {
            break;
        }
        let slope = (f(t + h) - f(t - h)) / (2.0 * h);
        if slope.abs() < 1e-6 {
            break;
        }
        let next = t - ft / slope;
        let fnext = f(next);
        if !(fnext.abs() < ft.abs()) {
            break;
        }
        t = next;
        ft = fnext;
    }
    t
}

fn normal_at(scene: &Scene, p: &Vec3) -> Vec3 {
    let h = 1e-6 * scene.diameter();
    let g = Vec3::new(
        scene.distance(&(p + Vec3::x() * h)) - scene.distance(&(p - Vec3::x() * h)),
        scene.distance(&(p + Vec3::y() * h)) - scene.distance(&(p - Vec3::y() * h)),
        scene.distance(&(p + Vec3::z() * h)) - scene.distance(&(p - Vec3::z() * h)),
    );
    let n = g.norm();
    if n > 0.0 {
        g / n
    } else {
        Vec3::y()
    }
}

/// Sphere-traced depth, label and flat Lambertian color for every pixel of `camera`.
pub fn render_ground_truth(scene: &Scene, camera: &Camera) -> ViewRender {
    let n = camera.image_size;
    let light = light_dir();
    let pixels: Vec<(f64, i32, [f64; 3])> = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let (row, col) = (i / n, i % n);
            let (o, d) = camera.pixel_ray(row, col);
            match trace(scene, &o, &d) {
                Some((t, idx)) => {
                    let prim = &scene.primitives[idx];
                    let p = o + d * t;
                    let shade = AMBIENT + (1.0 - AMBIENT) * normal_at(scene, &p).dot(&light).max(0.0);
                    (t, prim.part_label as i32, prim.albedo.map(|a| a * shade))
                }
                None => (NO_HIT, BACKGROUND_LABEL, BACKGROUND_COLOR),
            }
        })
        .collect();
    let mut depth = ImageBuf::filled(n, n, NO_HIT);
    let mut labels = ImageBuf::filled(n, n, BACKGROUND_LABEL);
    let mut color = ImageBuf::filled(n, n, BACKGROUND_COLOR);
    for (i, (t, l, c)) in pixels.into_iter().enumerate() {
        depth.data[i] = t;
        labels.data[i] = l;
        color.data[i] = c;
    }
    ViewRender {
        depth,
        labels,
        color,
    }
}

pub fn render_rig(scene: &Scene, rig: &CameraRig) -> Vec<ViewRender> {
    rig.cameras
        .iter()
        .map(|c| render_ground_truth(scene, c))
        .collect()
}
