use super::config::OptimizerKind;
use crate::field::{FieldModel, Gradients};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub sdf: f64,
    pub appearance: f64,
    pub inv_std: f64,
}

impl LearningRates {
    /// Every rate scaled by `k`.
    pub fn scaled(self, k: f64) -> Self {
        Self {
            sdf: self.sdf * k,
            appearance: self.appearance * k,
            inv_std: self.inv_std * k,
        }
    }
}

/// First-order optimizer over the flat grid parameters and the sharpness.
/// Slot `n` of the state vectors belongs to `log(inv_std)`.
///
/// Each step takes three learning rates: SDF values, the remaining
/// (feature and color) channels, and the sharpness.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    momentum: f64,
    stride: usize,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, model: &FieldModel, momentum: f64) -> Self {
        let n = model.params().len() + 1;
        Self {
            kind,
            momentum,
            stride: model.stride(),
            first: vec![0.0; n],
            second: if kind == OptimizerKind::Adam { vec![0.0; n] } else { Vec::new() },
            steps: 0,
        }
    }

    /// Cosine decay from `base` at step 0 towards zero at `total`.
    pub fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
        let x = step as f64 / total.max(1) as f64;
        0.5 * base * (1.0 + (std::f64::consts::PI * x).cos())
    }

    /// Applies one update and leaves `grads` zeroed.
    pub fn step(&mut self, model: &mut FieldModel, grads: &mut Gradients, lr: LearningRates) {
        let stride = self.stride;
        let lr_of = |i: usize| if i % stride == 0 { lr.sdf } else { lr.appearance };
        self.steps += 1;
        let n = model.params().len();
        let mut g_s = grads.log_inv_std;
        grads.log_inv_std = 0.0;
        let mut s = model.log_inv_std();
        match self.kind {
            OptimizerKind::Momentum => {
                let mu = self.momentum;
                let update = |p: &mut f64, v: &mut f64, g: &mut f64, lr: f64| {
                    *v = mu * *v + *g;
                    *p -= lr * *v;
                    *g = 0.0;
                };
                for (i, ((p, v), g)) in model
                    .params_mut()
                    .iter_mut()
                    .zip(&mut self.first[..n])
                    .zip(&mut grads.params)
                    .enumerate()
                {
                    update(p, v, g, lr_of(i));
                }
                update(&mut s, &mut self.first[n], &mut g_s, lr.inv_std);
            }
            OptimizerKind::Adam => {
                let t = self.steps as i32;
                let c1 = 1.0 / (1.0 - ADAM_BETA1.powi(t));
                let c2 = 1.0 / (1.0 - ADAM_BETA2.powi(t));
                let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: &mut f64, lr: f64| {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * *g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * *g * *g;
                    *p -= lr * (*m * c1) / ((*v * c2).sqrt() + ADAM_EPS);
                    *g = 0.0;
                };
                let (m_head, m_tail) = self.first.split_at_mut(n);
                let (v_head, v_tail) = self.second.split_at_mut(n);
                for (i, (((p, m), v), g)) in model
                    .params_mut()
                    .iter_mut()
                    .zip(m_head)
                    .zip(v_head)
                    .zip(&mut grads.params)
                    .enumerate()
                {
                    update(p, m, v, g, lr_of(i));
                }
                update(&mut s, &mut m_tail[0], &mut v_tail[0], &mut g_s, lr.inv_std);
            }
        }
        model.set_log_inv_std(s);
    }
}
