use rayon::prelude::*;

use super::grid::{sigmoid, FieldModel, Trilinear};
use crate::geom::Vec3;
use crate::image::ImageBuf;
use crate::scene::{Camera, NO_HIT};

/// Floor on the accumulated weight when normalizing depth.
pub const DEPTH_EPS: f64 = 1e-10;

/// Composited outputs of one ray. `color` and `feature` are weight sums (no
/// background term); `depth` is the weight-normalized mean sample distance.
#[derive(Debug, Clone, PartialEq)]
pub struct RayOutput {
    pub color: [f64; 3],
    pub feature: Vec<f64>,
    pub depth: f64,
    pub acc: f64,
}

/// One sample of a rendered ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub t: f64,
    pub position: Vec3,
    pub sdf: f64,
    pub alpha: f64,
    pub weight: f64,
}

/// Everything the backward pass needs from a forward render.
#[derive(Debug, Clone, Default)]
pub struct RayTape {
    pub(crate) origin: Vec3,
    pub(crate) direction: Vec3,
    pub(crate) stride: usize,
    pub(crate) t: Vec<f64>,
    pub(crate) tri: Vec<Trilinear>,
    pub(crate) sdf: Vec<f64>,
    /// sigma(-s * sdf): derivative factor of log Phi.
    pub(crate) sig_neg: Vec<f64>,
    /// Phi(sdf_{i+1}) / Phi(sdf_i) for each interval.
    pub(crate) ratio: Vec<f64>,
    /// Whether the unclamped alpha was positive.
    pub(crate) active: Vec<bool>,
    pub(crate) alpha: Vec<f64>,
    pub(crate) trans: Vec<f64>,
    pub(crate) weight: Vec<f64>,
    /// Per sample: features followed by squashed colors.
    pub(crate) attrs: Vec<f64>,
    pub(crate) inv_std: f64,
    pub(crate) output: Option<RayOutput>,
}

impl RayTape {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn output(&self) -> Option<&RayOutput> {
        self.output.as_ref()
    }

    pub fn samples(&self) -> Vec<RaySample> {
        (0..self.len())
            .map(|i| RaySample {
                t: self.t[i],
                position: self.origin + self.direction * self.t[i],
                sdf: self.sdf[i],
                alpha: self.alpha[i],
                weight: self.weight[i],
            })
            .collect()
    }

    /// Feature of sample `i` (before weighting).
    pub fn sample_feature(&self, i: usize) -> &[f64] {
        let nc = self.stride - 4;
        let w = nc + 3;
        &self.attrs[i * w..i * w + nc]
    }

    fn reset(&mut self, n: usize, stride: usize) {
        self.stride = stride;
        self.t.clear();
        self.tri.clear();
        self.sdf.clear();
        self.sig_neg.clear();
        self.ratio.clear();
        self.active.clear();
        self.alpha.clear();
        self.trans.clear();
        self.weight.clear();
        self.attrs.clear();
        self.t.reserve(n);
        self.attrs.reserve(n * (stride - 1));
        self.output = None;
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Renders one ray with stratified samples. Stratum `i` covers
/// `[near + i * dt, near + (i + 1) * dt)`; its sample sits at offset `jitter[i]`
/// within the stratum (0.5 when `jitter` is `None`).
pub fn render_ray_into(
    model: &FieldModel,
    origin: &Vec3,
    direction: &Vec3,
    n_samples: usize,
    near: f64,
    far: f64,
    jitter: Option<&[f64]>,
    tape: &mut RayTape,
) -> RayOutput {
    assert!(n_samples >= 2, "need at least two samples per ray");
    assert!(near < far, "near must be below far");
    let stride = model.stride();
    let nc = model.n_channels();
    let attr_w = nc + 3;
    tape.reset(n_samples, stride);
    tape.origin = *origin;
    tape.direction = *direction;
    let s = model.inv_std();
    tape.inv_std = s;
    let dt = (far - near) / n_samples as f64;
    let mut raw = vec![0.0; stride];
    let mut log_phi = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let off = jitter.map_or(0.5, |j| j[i]);
        let t = near + (i as f64 + off) * dt;
        let p = origin + direction * t;
        let tri = model.locate(&p);
        model.interpolate_into(&tri, &mut raw);
        let x = raw[0];
        tape.t.push(t);
        tape.tri.push(tri);
        tape.sdf.push(x);
        tape.sig_neg.push(sigmoid(-s * x));
        log_phi.push(-softplus(-s * x));
        tape.attrs.extend_from_slice(&raw[1..1 + nc]);
        for c in 0..3 {
            tape.attrs.push(sigmoid(raw[1 + nc + c]));
        }
    }

    let mut out = RayOutput {
        color: [0.0; 3],
        feature: vec![0.0; nc],
        depth: 0.0,
        acc: 0.0,
    };
    let mut trans = 1.0;
    let mut sum_t = 0.0;
    for i in 0..n_samples {
        let (ratio, active, alpha) = if i + 1 < n_samples {
            let d = log_phi[i + 1] - log_phi[i];
            let raw_alpha = -d.exp_m1();
            (d.exp(), raw_alpha > 0.0, raw_alpha.max(0.0))
        } else {
            (1.0, false, 0.0)
        };
        let w = alpha * trans;
        tape.ratio.push(ratio);
        tape.active.push(active);
        tape.alpha.push(alpha);
        tape.trans.push(trans);
        tape.weight.push(w);
        if w != 0.0 {
            let a = &tape.attrs[i * attr_w..(i + 1) * attr_w];
            for (f, v) in out.feature.iter_mut().zip(&a[..nc]) {
                *f += w * v;
            }
            for c in 0..3 {
                out.color[c] += w * a[nc + c];
            }
            out.acc += w;
            sum_t += w * tape.t[i];
        }
        trans *= 1.0 - alpha;
    }
    out.depth = sum_t / out.acc.max(DEPTH_EPS);
    tape.output = Some(out.clone());
    out
}

/// Renders one ray with samples at stratum midpoints and returns its tape.
pub fn render_ray(
    model: &FieldModel,
    origin: &Vec3,
    direction: &Vec3,
    n_samples: usize,
    near: f64,
    far: f64,
) -> (RayOutput, RayTape) {
    let mut tape = RayTape::default();
    let out = render_ray_into(model, origin, direction, n_samples, near, far, None, &mut tape);
    (out, tape)
}

/// Rendered depth per pixel; pixels with accumulated weight below 0.5, or whose
/// ray misses the model bounds, are [`NO_HIT`].
pub fn render_depth_map(model: &FieldModel, camera: &Camera, n_samples: usize) -> ImageBuf<f64> {
    let n = camera.image_size;
    let data: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map_init(RayTape::default, |tape, i| {
            let (o, d) = camera.pixel_ray(i / n, i % n);
            match model.bounds().intersect_ray(&o, &d) {
                Some((near, far)) => {
                    let out = render_ray_into(model, &o, &d, n_samples, near, far, None, tape);
                    if out.acc < 0.5 {
                        NO_HIT
                    } else {
                        out.depth
                    }
                }
                None => NO_HIT,
            }
        })
        .collect();
    ImageBuf::from_vec(n, n, data)
}
