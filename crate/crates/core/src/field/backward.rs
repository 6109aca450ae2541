use super::grid::FieldModel;
use super::render::{RayTape, DEPTH_EPS};

/// Whether gradients flow through the rendering weights (into SDF and sharpness)
/// or only into the per-sample attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Full,
    Detached,
}

/// Upstream gradient of a scalar loss with respect to one ray's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrad {
    pub color: [f64; 3],
    pub feature: Vec<f64>,
    pub depth: f64,
    pub acc: f64,
}

impl OutputGrad {
    pub fn zeros(n_channels: usize) -> Self {
        Self {
            color: [0.0; 3],
            feature: vec![0.0; n_channels],
            depth: 0.0,
            acc: 0.0,
        }
    }
}

/// Gradient buffers shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    /// Gradient with respect to `log(inv_std)`.
    pub log_inv_std: f64,
}

impl Gradients {
    pub fn zeros_like(model: &FieldModel) -> Self {
        Self {
            params: vec![0.0; model.params().len()],
            log_inv_std: 0.0,
        }
    }

    /// Gradient with respect to `inv_std` itself.
    pub fn inv_std(&self, model: &FieldModel) -> f64 {
        self.log_inv_std / model.inv_std()
    }

    pub fn clear(&mut self) {
        self.params.fill(0.0);
        self.log_inv_std = 0.0;
    }
}

/// Accumulates into `out` the gradient of a loss with upstream `grad` on the ray
/// recorded in `tape`.
pub fn backward(
    model: &FieldModel,
    tape: &RayTape,
    grad: &OutputGrad,
    mode: WeightMode,
    out: &mut Gradients,
) {
    let n = tape.len();
    if n == 0 {
        return;
    }
    let nc = model.n_channels();
    let attr_w = nc + 3;
    let stride = model.stride();
    let output = tape.output.as_ref().expect("tape holds a forward pass");
    let s = tape.inv_std;

    // d loss / d sdf_i
    let mut d_sdf = vec![0.0; n];
    if mode == WeightMode::Full {
        let acc = output.acc;
        let mut g = vec![0.0; n];
        for i in 0..n {
            let a = &tape.attrs[i * attr_w..(i + 1) * attr_w];
            let mut gi = grad.acc;
            for c in 0..nc {
                gi += grad.feature[c] * a[c];
            }
            for c in 0..3 {
                gi += grad.color[c] * a[nc + c];
            }
            gi += if acc > DEPTH_EPS {
                grad.depth * (tape.t[i] - output.depth) / acc
            } else {
                grad.depth * tape.t[i] / DEPTH_EPS
            };
            g[i] = gi;
        }
        // suffix[i] = sum_{k>i} g_k alpha_k prod_{i<j<k} (1 - alpha_j)
        let mut d_logphi = vec![0.0; n];
        let mut suffix = 0.0;
        for i in (0..n).rev() {
            if i + 1 < n {
                suffix = g[i + 1] * tape.alpha[i + 1] + (1.0 - tape.alpha[i + 1]) * suffix;
            }
            if tape.active[i] {
                let d_alpha = tape.trans[i] * (g[i] - suffix);
                // alpha = 1 - exp(logphi_{i+1} - logphi_i)
                d_logphi[i] += d_alpha * tape.ratio[i];
                d_logphi[i + 1] -= d_alpha * tape.ratio[i];
            }
        }
        let mut d_log_s = 0.0;
        for i in 0..n {
            // d logphi / dx = s * sigma(-s x); d logphi / ds = x * sigma(-s x)
            let k = d_logphi[i] * tape.sig_neg[i];
            d_sdf[i] = k * s;
            d_log_s += k * tape.sdf[i] * s;
        }
        out.log_inv_std += d_log_s;
    }

    let mut local = vec![0.0; stride];
    for i in 0..n {
        let w = tape.weight[i];
        if w == 0.0 && d_sdf[i] == 0.0 {
            continue;
        }
        let a = &tape.attrs[i * attr_w..(i + 1) * attr_w];
        local[0] = d_sdf[i];
        for c in 0..nc {
            local[1 + c] = w * grad.feature[c];
        }
        for c in 0..3 {
            let sq = a[nc + c];
            local[1 + nc + c] = w * grad.color[c] * sq * (1.0 - sq);
        }
        model.scatter(&tape.tri[i], &local, &mut out.params);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{render_ray_into, FieldInit, RayOutput};
    use crate::geom::Vec3;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Setup {
        model: FieldModel,
        origin: Vec3,
        dir: Vec3,
        near: f64,
        far: f64,
        n: usize,
        target: [f64; 3],
        up: OutputGrad,
    }

    fn setup(seed: u64) -> Setup {
        let mut model = FieldModel::new(&FieldInit {
            resolution: 8,
            n_channels: 3,
            seed,
            inv_std: 12.0,
            ..FieldInit::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in model.params_mut() {
            *v += rng.random::<f64>() * 0.4 - 0.2;
        }
        let origin = Vec3::new(-2.0, 0.13, 0.07);
        let dir = Vec3::new(1.0, 0.05, -0.03).normalize();
        let (near, far) = model.bounds().intersect_ray(&origin, &dir).unwrap();
        Setup {
            model,
            origin,
            dir,
            near,
            far,
            n: 4,
            target: [0.2, 0.7, 0.4],
            up: OutputGrad {
                color: [0.0; 3],
                feature: vec![0.3, -0.5, 0.8],
                depth: 0.4,
                acc: -0.6,
            },
        }
    }

    /// Smooth scalar loss of all outputs.
    fn loss(s: &Setup, out: &RayOutput) -> f64 {
        let color: f64 = (0..3).map(|c| (out.color[c] - s.target[c]).powi(2)).sum();
        let feat: f64 = (0..3).map(|c| s.up.feature[c] * out.feature[c]).sum();
        color + feat + s.up.depth * out.depth + s.up.acc * out.acc
    }

    fn forward(s: &Setup, m: &FieldModel) -> RayOutput {
        let mut tape = crate::field::RayTape::default();
        render_ray_into(m, &s.origin, &s.dir, s.n, s.near, s.far, None, &mut tape)
    }

    fn analytic(s: &Setup, mode: WeightMode) -> Gradients {
        let mut tape = crate::field::RayTape::default();
        let out = render_ray_into(&s.model, &s.origin, &s.dir, s.n, s.near, s.far, None, &mut tape);
        let mut up = s.up.clone();
        for c in 0..3 {
            up.color[c] = 2.0 * (out.color[c] - s.target[c]);
        }
        let mut g = Gradients::zeros_like(&s.model);
        backward(&s.model, &tape, &up, mode, &mut g);
        g
    }

    fn close(fd: f64, an: f64) -> bool {
        (fd - an).abs() <= 1e-3 * fd.abs().max(an.abs()) || (fd.abs() < 1e-6 && an.abs() < 1e-6)
    }

    #[test]
    fn parameter_gradients_match_central_differences() {
        let s = setup(7);
        let g = analytic(&s, WeightMode::Full);
        let touched: Vec<usize> = (0..g.params.len()).filter(|&i| g.params[i] != 0.0).collect();
        assert!(touched.len() > 20);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = 1e-4;
        let mut checked = 0;
        for _ in 0..200 {
            let i = touched[rng.random_range(0..touched.len())];
            let mut plus = s.model.clone();
            plus.params_mut()[i] += h;
            let mut minus = s.model.clone();
            minus.params_mut()[i] -= h;
            let fd = (loss(&s, &forward(&s, &plus)) - loss(&s, &forward(&s, &minus))) / (2.0 * h);
            if g.params[i].abs() > 1e-6 {
                assert!(close(fd, g.params[i]), "param {i}: fd {fd} analytic {}", g.params[i]);
                checked += 1;
            }
            if checked == 20 {
                break;
            }
        }
        assert_eq!(checked, 20);
    }

    #[test]
    fn inv_std_gradient_matches_central_differences() {
        let s = setup(8);
        let g = analytic(&s, WeightMode::Full);
        let h = 1e-4;
        let s0 = s.model.inv_std();
        let mut plus = s.model.clone();
        plus.set_log_inv_std((s0 + h).ln());
        let mut minus = s.model.clone();
        minus.set_log_inv_std((s0 - h).ln());
        let fd = (loss(&s, &forward(&s, &plus)) - loss(&s, &forward(&s, &minus))) / (2.0 * h);
        let an = g.inv_std(&s.model);
        assert!(an.abs() > 1e-6);
        assert!(close(fd, an), "fd {fd} analytic {an}");
    }

    #[test]
    fn untouched_corners_get_zero_gradient() {
        let s = setup(9);
        let g = analytic(&s, WeightMode::Full);
        let stride = s.model.stride();
        // the ray passes near y = 0.13, far from the y = -1 face
        let idx = s.model.corner_index(0, 0, 0);
        assert!(g.params[idx * stride..(idx + 1) * stride].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn detached_mode_leaves_geometry_untouched() {
        let s = setup(10);
        let g = analytic(&s, WeightMode::Detached);
        let stride = s.model.stride();
        assert_eq!(g.log_inv_std, 0.0);
        assert!(g.params.iter().step_by(stride).all(|v| *v == 0.0));
        assert!(g.params.iter().any(|v| *v != 0.0));
    }
}
