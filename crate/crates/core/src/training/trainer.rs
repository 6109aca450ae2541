use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::TrainConfig;
use super::contrastive::{info_nce_with_grad, MaskIndex};
use super::loss::{reconstruction_loss, PixelRay, RecWeights};
use super::optim::{LearningRates, Optimizer};
use crate::error::{Error, Result};
use crate::field::{backward, render_ray_into, FieldModel, Gradients, OutputGrad, RayTape, WeightMode};
use crate::geom::{Aabb, Vec3};
use crate::scene::{Camera, Dataset, BACKGROUND_MASK};

/// Random streams; each purpose draws from its own so that enabling one loss
/// term leaves the others' samples untouched.
const STREAM_RAYS: u64 = 1;
const STREAM_JITTER: u64 = 2;
const STREAM_EIKONAL: u64 = 3;
const STREAM_CONTRA: u64 = 4;
const STREAM_CONTRA_JITTER: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRecord {
    pub step: usize,
    pub total: f64,
    pub reconstruction: f64,
    pub color: f64,
    pub eikonal: f64,
    pub mask: f64,
    pub contrastive: f64,
    pub inv_std: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FieldModel,
    pub losses: Vec<LossRecord>,
}

impl TrainOutcome {
    pub fn write_loss_curve(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
        for r in &self.losses {
            w.serialize(r).map_err(|e| Error::load(path, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Ray through the center of `pixel` with its span inside `bounds`.
pub fn pixel_ray(camera: &Camera, pixel: usize, bounds: &Aabb) -> (Vec3, Vec3, Option<(f64, f64)>) {
    let n = camera.image_size;
    let (o, d) = camera.pixel_ray(pixel / n, pixel % n);
    let span = bounds.intersect_ray(&o, &d).filter(|(a, b)| b - a > 1e-9);
    (o, d, span)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Trains a fresh sphere-initialized model on `data`.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let model = FieldModel::new(&cfg.field_init())?;
    train_from(model, data, cfg, |_| {})
}

/// Trains `model` in place for `cfg.steps` steps, reporting every step.
pub fn train_from(
    mut model: FieldModel,
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_step: impl FnMut(&LossRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.n_views() == 0 {
        return Err(Error::invalid("dataset has no views"));
    }
    let ccfg = cfg.contrastive();
    let index = MaskIndex::new(&data.masks);
    let contrastive_on = ccfg.alpha > 0.0 && index.is_usable();
    if ccfg.alpha > 0.0 && !index.is_usable() {
        log::warn!("no view has two masks; contrastive term disabled");
    }
    let contra_mode = if cfg.contra_through_geometry {
        WeightMode::Full
    } else {
        WeightMode::Detached
    };
    let weights = RecWeights {
        lambda_eik: cfg.lambda_eik,
        lambda_mask: cfg.lambda_mask,
        background: cfg.background,
    };
    let n_pix = data.image_size() * data.image_size();
    let bounds = *model.bounds();

    let mut rng_rays = stream(cfg.seed, STREAM_RAYS);
    let mut rng_jitter = stream(cfg.seed, STREAM_JITTER);
    let mut rng_eik = stream(cfg.seed, STREAM_EIKONAL);
    let mut rng_contra = stream(cfg.seed, STREAM_CONTRA);
    let mut rng_contra_jitter = stream(cfg.seed, STREAM_CONTRA_JITTER);

    let mut opt = Optimizer::new(cfg.optimizer, &model, cfg.momentum);
    let mut grads = Gradients::zeros_like(&model);
    let mut tape = RayTape::default();
    let tuple_len = 1 + ccfg.n_pos + ccfg.n_neg;
    let mut tapes: Vec<RayTape> = vec![RayTape::default(); tuple_len];
    let mut rays = Vec::with_capacity(cfg.ray_batch);
    let mut jitter = vec![0.0; cfg.ray_batch * cfg.n_samples];
    let mut eik_points = vec![Vec3::zeros(); cfg.eikonal_points];
    let mut losses = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        rays.clear();
        for _ in 0..cfg.ray_batch {
            let view = rng_rays.random_range(0..data.n_views());
            let pixel = rng_rays.random_range(0..n_pix);
            let (origin, direction, span) = pixel_ray(&data.rig.cameras[view], pixel, &bounds);
            rays.push(PixelRay {
                origin,
                direction,
                span,
                target: data.color_f64(view, pixel),
                foreground: data.masks.views[view].data[pixel] != BACKGROUND_MASK,
            });
        }
        jitter.iter_mut().for_each(|j| *j = rng_jitter.random::<f64>());
        for p in eik_points.iter_mut() {
            *p = Vec3::from_fn(|a, _| bounds.min[a] + rng_eik.random::<f64>() * (bounds.max[a] - bounds.min[a]));
        }
        let rec = reconstruction_loss(
            &model,
            &rays,
            cfg.n_samples,
            Some(&jitter),
            &eik_points,
            &weights,
            &mut tape,
            Some(&mut grads),
        );

        let mut contra = 0.0;
        if contrastive_on {
            let batch = index.sample(&ccfg, &mut rng_contra);
            let scale = ccfg.alpha / batch.len() as f64;
            let mut sample_jitter = vec![0.0; cfg.n_samples];
            let mut feats: Vec<Vec<f64>> = vec![Vec::new(); tuple_len];
            for tuple in &batch.tuples {
                let camera = &data.rig.cameras[tuple.view];
                let pixels = std::iter::once(tuple.query)
                    .chain(tuple.positives.iter().copied())
                    .chain(tuple.negatives.iter().copied());
                for (k, pixel) in pixels.enumerate() {
                    sample_jitter.iter_mut().for_each(|j| *j = rng_contra_jitter.random::<f64>());
                    let (o, d, span) = pixel_ray(camera, pixel, &bounds);
                    feats[k] = match span {
                        Some((near, far)) => {
                            render_ray_into(&model, &o, &d, cfg.n_samples, near, far, Some(&sample_jitter), &mut tapes[k])
                                .feature
                        }
                        None => {
                            tapes[k] = RayTape::default();
                            vec![0.0; model.n_channels()]
                        }
                    };
                }
                let pos: Vec<&[f64]> = feats[1..1 + ccfg.n_pos].iter().map(|f| f.as_slice()).collect();
                let neg: Vec<&[f64]> = feats[1 + ccfg.n_pos..].iter().map(|f| f.as_slice()).collect();
                let g = info_nce_with_grad(&feats[0], &pos, &neg, ccfg.temperature);
                contra += g.loss / batch.len() as f64;
                let per_ray = std::iter::once(&g.query).chain(&g.positives).chain(&g.negatives);
                for (k, gf) in per_ray.enumerate() {
                    if tapes[k].is_empty() {
                        continue;
                    }
                    let mut og = OutputGrad::zeros(model.n_channels());
                    for (o, v) in og.feature.iter_mut().zip(gf) {
                        *o = scale * v;
                    }
                    backward(&model, &tapes[k], &og, contra_mode, &mut grads);
                }
            }
        }

        let total = rec.total + ccfg.alpha * contra;
        if !total.is_finite() {
            return Err(Error::NonFiniteLoss {
                step,
                detail: format!(
                    "color {} eikonal {} mask {} contrastive {}",
                    rec.color, rec.eikonal, rec.mask, contra
                ),
            });
        }
        let decay = Optimizer::cosine_lr(1.0, step, cfg.steps);
        let lr = LearningRates {
            sdf: cfg.sdf_learning_rate,
            appearance: cfg.learning_rate,
            inv_std: cfg.inv_std_learning_rate,
        };
        opt.step(&mut model, &mut grads, lr.scaled(decay));

        let record = LossRecord {
            step,
            total,
            reconstruction: rec.total,
            color: rec.color,
            eikonal: rec.eikonal,
            mask: rec.mask,
            contrastive: contra,
            inv_std: model.inv_std(),
        };
        if step % 100 == 0 || step + 1 == cfg.steps {
            log::debug!(
                "step {step}: total {:.5} color {:.5} eik {:.5} mask {:.5} contra {:.5} s {:.1}",
                total,
                rec.color,
                rec.eikonal,
                rec.mask,
                contra,
                record.inv_std
            );
        }
        on_step(&record);
        losses.push(record);
    }
    Ok(TrainOutcome { model, losses })
}

/// Mean absolute color error per channel over every pixel of every view,
/// rendered at stratum midpoints over a white-or-configured background.
pub fn color_error(model: &FieldModel, data: &Dataset, n_samples: usize, background: [f64; 3]) -> f64 {
    use rayon::prelude::*;
    let n_pix = data.image_size() * data.image_size();
    let bounds = *model.bounds();
    let per_pixel: Vec<f64> = (0..data.n_views() * n_pix)
        .into_par_iter()
        .map_init(RayTape::default, |tape, i| {
            let (view, pixel) = (i / n_pix, i % n_pix);
            let (o, d, span) = pixel_ray(&data.rig.cameras[view], pixel, &bounds);
            let (c, acc) = span.map_or(([0.0; 3], 0.0), |(near, far)| {
                let out = render_ray_into(model, &o, &d, n_samples, near, far, None, tape);
                (out.color, out.acc)
            });
            let target = data.color_f64(view, pixel);
            (0..3)
                .map(|k| (c[k] + (1.0 - acc) * background[k] - target[k]).abs())
                .sum::<f64>()
                / 3.0
        })
        .collect();
    per_pixel.iter().sum::<f64>() / per_pixel.len().max(1) as f64
}
