use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::render::{ViewRender, BACKGROUND_LABEL};
use crate::error::{Error, Result};
use crate::image::ImageBuf;

pub const BACKGROUND_MASK: u16 = 0;

/// One view's masks: each pixel holds a view-local mask ID, or [`BACKGROUND_MASK`].
pub type MaskMap = ImageBuf<u16>;

/// Per-view mask maps. IDs carry no correspondence across views.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    pub views: Vec<MaskMap>,
}

/// Inconsistency model for simulated segmentations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub p_merge: f64,
    pub p_split: f64,
    pub boundary_jitter_px: u32,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        p_merge: 0.0,
        p_split: 0.0,
        boundary_jitter_px: 0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_merge", self.p_merge), ("p_split", self.p_split)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::NONE
    }
}

impl MaskSet {
    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// Sorted distinct non-background IDs of one view.
    pub fn ids(&self, view: usize) -> Vec<u16> {
        mask_ids(&self.views[view])
    }

    /// Applies an independent random relabeling to every view. Region sets are unchanged.
    pub fn permute_ids(&self, seed: u64) -> MaskSet {
        let views = self
            .views
            .iter()
            .enumerate()
            .map(|(v, m)| {
                let mut rng = view_rng(seed ^ 0x5eed_1d5, v);
                relabel_shuffled(m, &mut rng)
            })
            .collect();
        MaskSet { views }
    }

    /// Keeps only the listed views, in the given order.
    pub fn select_views(&self, views: &[usize]) -> MaskSet {
        MaskSet {
            views: views.iter().map(|&v| self.views[v].clone()).collect(),
        }
    }
}

pub(crate) fn mask_ids(m: &MaskMap) -> Vec<u16> {
    let set: BTreeSet<u16> = m.data.iter().copied().filter(|&id| id != BACKGROUND_MASK).collect();
    set.into_iter().collect()
}

fn view_rng(seed: u64, view: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(view as u64 + 1);
    rng
}

/// Replaces the present IDs with a random permutation of `1..=K`.
fn relabel_shuffled(m: &MaskMap, rng: &mut ChaCha8Rng) -> MaskMap {
    let ids = mask_ids(m);
    let mut targets: Vec<u16> = (1..=ids.len() as u16).collect();
    targets.shuffle(rng);
    let lut: std::collections::HashMap<u16, u16> = ids.into_iter().zip(targets).collect();
    let data = m
        .data
        .iter()
        .map(|&id| if id == BACKGROUND_MASK { id } else { lut[&id] })
        .collect();
    MaskMap::from_vec(m.width, m.height, data)
}

/// Pairs of distinct foreground IDs sharing a 4-neighbor boundary, sorted.
fn adjacent_pairs(m: &MaskMap) -> Vec<(u16, u16)> {
    let mut pairs = BTreeSet::new();
    for i in 0..m.len() {
        let a = m.data[i];
        if a == BACKGROUND_MASK {
            continue;
        }
        for j in m.neighbors4(i) {
            let b = m.data[j];
            if b != BACKGROUND_MASK && b != a {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    pairs.into_iter().collect()
}

fn perturb_view(render: &ViewRender, cfg: &NoiseConfig, rng: &mut ChaCha8Rng) -> MaskMap {
    let labels = &render.labels;
    let mut work: Vec<u16> = labels
        .data
        .iter()
        .map(|&l| {
            if l == BACKGROUND_LABEL {
                BACKGROUND_MASK
            } else {
                u16::try_from(l + 1).expect("part label fits in u16")
            }
        })
        .collect();
    let mut m = MaskMap::from_vec(labels.width, labels.height, std::mem::take(&mut work));
    if mask_ids(&m).is_empty() {
        return m;
    }

    // merge two adjacent masks
    let merge_roll: f64 = rng.random();
    if merge_roll < cfg.p_merge {
        let pairs = adjacent_pairs(&m);
        if !pairs.is_empty() {
            let (a, b) = pairs[rng.random_range(0..pairs.len())];
            for id in m.data.iter_mut() {
                if *id == b {
                    *id = a;
                }
            }
        }
    }

    // split one mask by a random line through one of its pixels
    let split_roll: f64 = rng.random();
    if split_roll < cfg.p_split {
        let ids = mask_ids(&m);
        let target = ids[rng.random_range(0..ids.len())];
        let pixels: Vec<usize> = (0..m.len()).filter(|&i| m.data[i] == target).collect();
        let anchor = m.coords(pixels[rng.random_range(0..pixels.len())]);
        let theta = rng.random::<f64>() * std::f64::consts::PI;
        let (nx, ny) = (theta.cos(), theta.sin());
        let fresh = ids.last().copied().unwrap_or(0) + 1;
        let side = |i: usize| {
            let (r, c) = m.coords(i);
            (c as f64 - anchor.1 as f64) * nx + (r as f64 - anchor.0 as f64) * ny > 0.0
        };
        let moved: Vec<usize> = pixels.iter().copied().filter(|&i| side(i)).collect();
        if !moved.is_empty() && moved.len() < pixels.len() {
            for i in moved {
                m.data[i] = fresh;
            }
        }
    }

    // boundary jitter: each mask grows by a random radius into its foreground neighbors,
    // which erodes the neighbors by the same amount
    if cfg.boundary_jitter_px > 0 {
        let ids = mask_ids(&m);
        let radii: Vec<u32> = ids
            .iter()
            .map(|_| rng.random_range(0..=cfg.boundary_jitter_px))
            .collect();
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.shuffle(rng);
        for k in order {
            let id = ids[k];
            for _ in 0..radii[k] {
                let grow: Vec<usize> = (0..m.len())
                    .filter(|&i| {
                        let cur = m.data[i];
                        cur != BACKGROUND_MASK
                            && cur != id
                            && m.neighbors4(i).any(|j| m.data[j] == id)
                    })
                    .collect();
                for i in grow {
                    m.data[i] = id;
                }
            }
        }
    }

    relabel_shuffled(&m, rng)
}

/// Turns ground-truth label maps into SAM-like masks: optional merge, split and
/// boundary jitter, followed by an unconditional per-view random relabeling.
pub fn perturb_masks(renders: &[ViewRender], cfg: &NoiseConfig, seed: u64) -> Result<MaskSet> {
    cfg.validate()?;
    let views = renders
        .iter()
        .enumerate()
        .map(|(v, r)| perturb_view(r, cfg, &mut view_rng(seed, v)))
        .collect();
    Ok(MaskSet { views })
}
