use std::collections::HashMap;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ContrastiveConfig;
use crate::scene::{MaskSet, BACKGROUND_MASK};

/// One query pixel with positives from its own mask and negatives from other
/// masks of the same view. Pixels are flat indices into the view image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastiveTuple {
    pub view: usize,
    pub query: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContrastiveBatch {
    pub tuples: Vec<ContrastiveTuple>,
}

impl ContrastiveBatch {
    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }
}

#[derive(Debug, Clone)]
struct ViewIndex {
    /// Foreground pixels in increasing order.
    foreground: Vec<usize>,
    /// Pixels of each mask in increasing order.
    members: HashMap<u16, Vec<usize>>,
    mask: Vec<u16>,
}

/// Per-view pixel lists for sampling. All lists are ordered by pixel index, so
/// the samples do not depend on how masks happen to be numbered.
#[derive(Debug, Clone)]
pub struct MaskIndex {
    views: Vec<ViewIndex>,
    /// Views with at least two masks; only they can supply negatives.
    eligible: Vec<usize>,
    /// Running foreground totals over `eligible`.
    cumulative: Vec<usize>,
}

impl MaskIndex {
    pub fn new(masks: &MaskSet) -> Self {
        let mut views = Vec::with_capacity(masks.n_views());
        let mut eligible = Vec::new();
        let mut cumulative = Vec::new();
        let mut total = 0;
        for (v, m) in masks.views.iter().enumerate() {
            let mut foreground = Vec::new();
            let mut members: HashMap<u16, Vec<usize>> = HashMap::new();
            for (i, &id) in m.data.iter().enumerate() {
                if id != BACKGROUND_MASK {
                    foreground.push(i);
                    members.entry(id).or_default().push(i);
                }
            }
            if members.len() >= 2 {
                eligible.push(v);
                total += foreground.len();
                cumulative.push(total);
            }
            views.push(ViewIndex {
                foreground,
                members,
                mask: m.data.clone(),
            });
        }
        Self {
            views,
            eligible,
            cumulative,
        }
    }

    /// Whether any view can produce a tuple.
    pub fn is_usable(&self) -> bool {
        !self.eligible.is_empty()
    }

    /// Draws a batch; empty when no view has two masks.
    pub fn sample<R: Rng + ?Sized>(&self, cfg: &ContrastiveConfig, rng: &mut R) -> ContrastiveBatch {
        let Some(&total) = self.cumulative.last() else {
            return ContrastiveBatch::default();
        };
        let tuples = (0..cfg.n_query)
            .map(|_| {
                let k = rng.random_range(0..total);
                let slot = self.cumulative.partition_point(|&c| c <= k);
                let before = if slot == 0 { 0 } else { self.cumulative[slot - 1] };
                let view = self.eligible[slot];
                let vi = &self.views[view];
                let query = vi.foreground[k - before];
                let id = vi.mask[query];
                let same = &vi.members[&id];
                let positives = (0..cfg.n_pos)
                    .map(|_| same[rng.random_range(0..same.len())])
                    .collect();
                let negatives = (0..cfg.n_neg)
                    .map(|_| loop {
                        let p = vi.foreground[rng.random_range(0..vi.foreground.len())];
                        if vi.mask[p] != id {
                            break p;
                        }
                    })
                    .collect();
                ContrastiveTuple {
                    view,
                    query,
                    positives,
                    negatives,
                }
            })
            .collect();
        ContrastiveBatch { tuples }
    }
}

/// Draws one contrastive batch from `masks` with a seeded generator.
pub fn sample_contrastive_batch(masks: &MaskSet, cfg: &ContrastiveConfig, seed: u64) -> ContrastiveBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MaskIndex::new(masks).sample(cfg, &mut rng)
}

fn cosine(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    if na == 0.0 || nb == 0.0 {
        (0.0, na, nb)
    } else {
        (dot / (na * nb), na, nb)
    }
}

/// Adds `scale * d cos(a, b) / d a` into `out`.
fn cosine_grad_into(a: &[f64], b: &[f64], cos: f64, na: f64, nb: f64, scale: f64, out: &mut [f64]) {
    if na == 0.0 || nb == 0.0 || scale == 0.0 {
        return;
    }
    let inv = 1.0 / (na * nb);
    let self_term = cos / (na * na);
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o += scale * (y * inv - self_term * x);
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// InfoNCE with cosine similarity, averaged over the positives. Zero-length
/// features count as orthogonal to everything.
pub fn info_nce(query: &[f64], positives: &[&[f64]], negatives: &[&[f64]], temperature: f64) -> f64 {
    assert!(!positives.is_empty(), "need at least one positive");
    let neg: Vec<f64> = negatives.iter().map(|n| cosine(query, n).0 / temperature).collect();
    let mut logits = Vec::with_capacity(neg.len() + 1);
    let mut loss = 0.0;
    for p in positives {
        let lp = cosine(query, p).0 / temperature;
        logits.clear();
        logits.push(lp);
        logits.extend_from_slice(&neg);
        loss += log_sum_exp(&logits) - lp;
    }
    loss / positives.len() as f64
}

/// Loss value and gradients with respect to every input feature.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNceGrad {
    pub loss: f64,
    pub query: Vec<f64>,
    pub positives: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn info_nce_with_grad(
    query: &[f64],
    positives: &[&[f64]],
    negatives: &[&[f64]],
    temperature: f64,
) -> InfoNceGrad {
    assert!(!positives.is_empty(), "need at least one positive");
    let inv_t = 1.0 / temperature;
    let inv_p = 1.0 / positives.len() as f64;
    let pos_cos: Vec<_> = positives.iter().map(|p| cosine(query, p)).collect();
    let neg_cos: Vec<_> = negatives.iter().map(|n| cosine(query, n)).collect();

    let mut loss = 0.0;
    let mut d_pos = vec![0.0; positives.len()];
    let mut d_neg = vec![0.0; negatives.len()];
    let mut logits = Vec::with_capacity(negatives.len() + 1);
    for (k, &(cp, _, _)) in pos_cos.iter().enumerate() {
        logits.clear();
        logits.push(cp * inv_t);
        logits.extend(neg_cos.iter().map(|c| c.0 * inv_t));
        let lse = log_sum_exp(&logits);
        loss += lse - logits[0];
        d_pos[k] += inv_p * inv_t * ((logits[0] - lse).exp() - 1.0);
        for (d, l) in d_neg.iter_mut().zip(&logits[1..]) {
            *d += inv_p * inv_t * (l - lse).exp();
        }
    }

    let dim = query.len();
    let mut g_query = vec![0.0; dim];
    let mut g_pos = Vec::with_capacity(positives.len());
    for ((p, &(c, nq, np)), &d) in positives.iter().zip(&pos_cos).zip(&d_pos) {
        cosine_grad_into(query, p, c, nq, np, d, &mut g_query);
        let mut g = vec![0.0; dim];
        cosine_grad_into(p, query, c, np, nq, d, &mut g);
        g_pos.push(g);
    }
    let mut g_neg = Vec::with_capacity(negatives.len());
    for ((n, &(c, nq, nn)), &d) in negatives.iter().zip(&neg_cos).zip(&d_neg) {
        cosine_grad_into(query, n, c, nq, nn, d, &mut g_query);
        let mut g = vec![0.0; dim];
        cosine_grad_into(n, query, c, nn, nq, d, &mut g);
        g_neg.push(g);
    }
    InfoNceGrad {
        loss: loss * inv_p,
        query: g_query,
        positives: g_pos,
        negatives: g_neg,
    }
}
