use crate::field::{backward, render_ray_into, FieldModel, Gradients, OutputGrad, RayTape, WeightMode};
use crate::geom::Vec3;

/// Floor inside the logarithms of the foreground BCE.
const BCE_EPS: f64 = 1e-12;

/// A training pixel: its ray clipped to the model bounds and its targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelRay {
    pub origin: Vec3,
    pub direction: Vec3,
    /// `None` when the ray misses the model bounds; it then renders as background.
    pub span: Option<(f64, f64)>,
    pub target: [f64; 3],
    pub foreground: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecWeights {
    pub lambda_eik: f64,
    pub lambda_mask: f64,
    pub background: [f64; 3],
}

/// Unweighted loss terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecLossTerms {
    pub color: f64,
    pub eikonal: f64,
    pub mask: f64,
    pub eikonal_weighted: f64,
    pub mask_weighted: f64,
    pub total: f64,
}

/// Mean of `(|grad f| - 1)^2` over `points`, where `grad f` is the gradient of
/// the trilinear SDF inside each point's cell. Adds `scale` times its gradient
/// into `grads`.
pub fn eikonal_term(model: &FieldModel, points: &[Vec3], scale: f64, grads: Option<&mut Gradients>) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let stride = model.stride();
    let params = model.params();
    let inv_m = 1.0 / points.len() as f64;
    let mut total = 0.0;
    let mut grads = grads;
    for p in points {
        let (idx, d) = model.sdf_gradient_stencil(p);
        let mut g = [0.0; 3];
        for k in 0..8 {
            let f = params[idx[k] * stride];
            for a in 0..3 {
                g[a] += d[k][a] * f;
            }
        }
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        total += (norm - 1.0).powi(2);
        if let Some(out) = grads.as_deref_mut() {
            if norm > 0.0 {
                let k = scale * inv_m * 2.0 * (norm - 1.0) / norm;
                for c in 0..8 {
                    let dot = g[0] * d[c][0] + g[1] * d[c][1] + g[2] * d[c][2];
                    out.params[idx[c] * stride] += k * dot;
                }
            }
        }
    }
    total * inv_m
}

fn bce(acc: f64, foreground: bool) -> (f64, f64) {
    if foreground {
        let a = acc.max(BCE_EPS);
        (-a.ln(), if acc > BCE_EPS { -1.0 / acc } else { 0.0 })
    } else {
        let b = (1.0 - acc).max(BCE_EPS);
        (-b.ln(), if 1.0 - acc > BCE_EPS { 1.0 / (1.0 - acc) } else { 0.0 })
    }
}

/// Reconstruction loss over a batch of pixels plus the eikonal term at
/// `eikonal_points`. `jitter` holds `n_samples` stratum offsets per ray
/// (midpoints when `None`). With `grads`, the gradient of the total is
/// accumulated into it.
#[allow(clippy::too_many_arguments)]
pub fn reconstruction_loss(
    model: &FieldModel,
    rays: &[PixelRay],
    n_samples: usize,
    jitter: Option<&[f64]>,
    eikonal_points: &[Vec3],
    weights: &RecWeights,
    tape: &mut RayTape,
    mut grads: Option<&mut Gradients>,
) -> RecLossTerms {
    let bg = weights.background;
    let nc = model.n_channels();
    let inv_b = if rays.is_empty() { 0.0 } else { 1.0 / rays.len() as f64 };
    let mut color = 0.0;
    let mut mask = 0.0;
    let mut og = OutputGrad::zeros(nc);
    for (r, ray) in rays.iter().enumerate() {
        let out = ray.span.map(|(near, far)| {
            let j = jitter.map(|j| &j[r * n_samples..(r + 1) * n_samples]);
            render_ray_into(model, &ray.origin, &ray.direction, n_samples, near, far, j, tape)
        });
        let (c, acc) = out.as_ref().map_or(([0.0; 3], 0.0), |o| (o.color, o.acc));
        let mut d_acc = 0.0;
        for k in 0..3 {
            let diff = c[k] + (1.0 - acc) * bg[k] - ray.target[k];
            color += diff.abs() / 3.0;
            let g = diff.signum() / 3.0 * inv_b;
            og.color[k] = if diff == 0.0 { 0.0 } else { g };
            d_acc -= og.color[k] * bg[k];
        }
        let (l, dl) = bce(acc, ray.foreground);
        mask += l;
        d_acc += weights.lambda_mask * inv_b * dl;
        og.acc = d_acc;
        if let (Some(g), Some(_)) = (grads.as_deref_mut(), out.as_ref()) {
            backward(model, tape, &og, WeightMode::Full, g);
        }
    }
    color *= inv_b;
    mask *= inv_b;
    let eikonal = eikonal_term(model, eikonal_points, weights.lambda_eik, grads);
    let eikonal_weighted = weights.lambda_eik * eikonal;
    let mask_weighted = weights.lambda_mask * mask;
    RecLossTerms {
        color,
        eikonal,
        mask,
        eikonal_weighted,
        mask_weighted,
        total: color + eikonal_weighted + mask_weighted,
    }
}
