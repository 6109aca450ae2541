use serde::{Deserialize, Serialize};

use super::davies_bouldin::davies_bouldin;
use super::kmeans::{farthest_point_init, kmeans, sq_dist};
use super::split::{canonical_labels, split_connected};
use super::visibility::{propagate_labels, visible_vertices};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::image::ImageBuf;
use crate::meshing::LabeledMesh;
use crate::partcount::{connected_components, seed_points, MaskGraph, OverlapTable, NOISE_FLOOR};
use crate::scene::{CameraRig, MaskSet};

pub const DEFAULT_TAUS: [f64; 6] = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7];

/// Scores closer than this count as equal; the smaller τ then wins.
pub const DB_TIE: f64 = 1e-9;

/// How k-means centers are initialized for each candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterInit {
    /// Features at the mesh vertices nearest the mask-graph seeds.
    Seeds,
    /// Features of the first K mesh vertices.
    FirstK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub taus: Vec<f64>,
    /// Fixed part count; skips the mask graph entirely.
    pub parts: Option<usize>,
    /// Occlusion tolerance for mask projection, in world units.
    pub eps_occ: f64,
    pub center_init: CenterInit,
}

impl SweepConfig {
    pub fn new(eps_occ: f64) -> Self {
        Self {
            taus: DEFAULT_TAUS.to_vec(),
            parts: None,
            eps_occ,
            center_init: CenterInit::Seeds,
        }
    }
}

/// One row of the τ sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub tau: f64,
    pub n_parts: usize,
    pub n_parts_raw: usize,
    /// `inf` for single-part or failed candidates.
    pub db_score: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    /// Threshold of the chosen candidate; `None` when the part count was given.
    pub tau: Option<f64>,
    pub n_parts: usize,
    /// Per-vertex labels in `0..n_parts`, numbered by first appearance.
    pub labels: Vec<usize>,
    pub db_score: f64,
    pub seed_points: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub result: SegmentationResult,
    pub candidates: Vec<Candidate>,
    /// Mask graph per τ, in sweep order.
    pub graphs: Vec<(f64, MaskGraph)>,
}

/// Position in `subset` of the subset vertex nearest `p`.
fn nearest_vertex(mesh: &LabeledMesh, subset: &[usize], p: &Vec3) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in subset.iter().enumerate() {
        let d = (mesh.vertices[v] - p).norm_squared();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Vertices visible in some view, or all vertices if fewer than two are.
fn clustered_vertices(mesh: &LabeledMesh, depths: &[ImageBuf<f64>], rig: &CameraRig, eps_occ: f64) -> Result<Vec<bool>> {
    let n = mesh.n_vertices();
    let seen = visible_vertices(mesh, depths, rig, eps_occ)?;
    let count = seen.iter().filter(|&&s| s).count();
    if count < 2 {
        log::warn!("{count} of {n} vertices visible; clustering all of them");
        return Ok(vec![true; n]);
    }
    if count < n {
        log::debug!("{} of {n} vertices hidden from every view", n - count);
    }
    Ok(seen)
}

fn cluster(features: &[Vec<f64>], init: Vec<Vec<f64>>) -> Option<(Vec<usize>, f64)> {
    let k = init.len();
    match kmeans(features, k, &init) {
        Ok(r) => {
            let db = davies_bouldin(features, &r.labels).unwrap_or(f64::INFINITY);
            Some((canonical_labels(&r.labels), db))
        }
        Err(e) => {
            log::warn!("k-means with k = {k} failed: {e}");
            None
        }
    }
}

/// Runs the part count at every τ, clusters the vertex features with k-means
/// from the resulting seeds, and keeps the candidate with the lowest
/// Davies-Bouldin score among those with at least two parts.
///
/// Clustering and scoring use the vertices visible in some view (all vertices
/// if fewer than two are visible); hidden vertices then take the label of the
/// nearest visible vertex over the mesh.
pub fn segment_sweep(
    mesh: &LabeledMesh,
    masks: &MaskSet,
    depths: &[ImageBuf<f64>],
    rig: &CameraRig,
    cfg: &SweepConfig,
) -> Result<SweepOutcome> {
    if mesh.is_empty() {
        return Err(Error::invalid("cannot segment an empty mesh"));
    }
    if !mesh.has_features() {
        return Err(Error::invalid("mesh has no vertex features"));
    }
    let n = mesh.n_vertices();
    let seen = clustered_vertices(mesh, depths, rig, cfg.eps_occ)?;
    let subset: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    let features: Vec<Vec<f64>> = subset.iter().map(|&i| mesh.vertex_features[i].clone()).collect();
    let features = &features;
    let m_sub = subset.len();
    let spread = |labels: Vec<usize>| canonical_labels(&propagate_labels(mesh, &subset, &labels));

    if let Some(k) = cfg.parts {
        if k == 0 {
            return Err(Error::invalid("part count must be at least 1"));
        }
        let (labels, db) = if k == 1 {
            (vec![0; n], f64::INFINITY)
        } else {
            let init = match cfg.center_init {
                CenterInit::Seeds => farthest_point_init(features, k),
                CenterInit::FirstK => features[..k.min(m_sub)].to_vec(),
            };
            let (l, db) =
                cluster(features, init).ok_or_else(|| Error::invalid(format!("cannot form {k} clusters")))?;
            (spread(l), db)
        };
        return Ok(SweepOutcome {
            result: SegmentationResult {
                tau: None,
                n_parts: k,
                labels,
                db_score: db,
                seed_points: Vec::new(),
            },
            candidates: Vec::new(),
            graphs: Vec::new(),
        });
    }

    let mut taus = cfg.taus.clone();
    if taus.is_empty() {
        return Err(Error::invalid("no τ values to sweep"));
    }
    if let Some(bad) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::invalid(format!("tau must lie in (0, 1), got {bad}")));
    }
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let table = OverlapTable::compute(masks, depths, rig, cfg.eps_occ)?;
    let mut candidates = Vec::with_capacity(taus.len());
    let mut graphs = Vec::with_capacity(taus.len());
    let mut results: Vec<SegmentationResult> = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let graph = table.graph(tau);
        let est = seed_points(&connected_components(&graph, NOISE_FLOOR), &table, masks, depths, rig)?;
        let m = est.n_parts;
        let clustered = if m >= 2 {
            let init: Vec<Vec<f64>> = match cfg.center_init {
                CenterInit::Seeds => est
                    .seed_points
                    .iter()
                    .map(|s| features[nearest_vertex(mesh, &subset, s)].clone())
                    .collect(),
                CenterInit::FirstK => features[..m.min(m_sub)].to_vec(),
            };
            cluster(features, init)
        } else {
            None
        };
        let (labels, db, n_parts) = match clustered {
            Some((l, db)) => (spread(l), db, m),
            None => (vec![0; n], f64::INFINITY, m.max(1)),
        };
        log::debug!("tau {tau}: {n_parts} parts ({} raw), DB {db}", est.n_parts_raw);
        candidates.push(Candidate {
            tau,
            n_parts,
            n_parts_raw: est.n_parts_raw,
            db_score: db,
            selected: false,
        });
        results.push(SegmentationResult {
            tau: Some(tau),
            n_parts,
            labels,
            db_score: db,
            seed_points: est.seed_points,
        });
        graphs.push((tau, graph));
    }

    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.n_parts < 2 {
            continue;
        }
        match best {
            Some(b) if !(c.db_score < candidates[b].db_score - DB_TIE) => {}
            _ => best = Some(i),
        }
    }
    let chosen = best.unwrap_or(0);
    candidates[chosen].selected = true;
    let mut result = results.swap_remove(chosen);
    if best.is_none() {
        result.n_parts = 1;
        result.labels = vec![0; n];
        result.db_score = f64::INFINITY;
    }
    Ok(SweepOutcome {
        result,
        candidates,
        graphs,
    })
}

/// Sweep followed by connectivity refinement, with piece sizes counted over
/// the clustered vertices; `n_parts` counts the final labels.
pub fn segment(
    mesh: &LabeledMesh,
    masks: &MaskSet,
    depths: &[ImageBuf<f64>],
    rig: &CameraRig,
    cfg: &SweepConfig,
) -> Result<SweepOutcome> {
    let mut out = segment_sweep(mesh, masks, depths, rig, cfg)?;
    let seen = clustered_vertices(mesh, depths, rig, cfg.eps_occ)?;
    out.result.labels = split_connected(mesh, &out.result.labels, &seen);
    out.result.n_parts = out.result.labels.iter().max().map_or(0, |m| m + 1);
    Ok(out)
}

/// Mean squared distance of features to their cluster centroid; a cheap
/// compactness measure for reports.
pub fn inertia(features: &[Vec<f64>], labels: &[usize]) -> f64 {
    let m = labels.iter().max().map_or(0, |l| l + 1);
    if m == 0 {
        return 0.0;
    }
    let dim = features[0].len();
    let mut centroids = vec![vec![0.0; dim]; m];
    let mut counts = vec![0usize; m];
    for (f, &l) in features.iter().zip(labels) {
        counts[l] += 1;
        for (c, x) in centroids[l].iter_mut().zip(f) {
            *c += x;
        }
    }
    for (c, &k) in centroids.iter_mut().zip(&counts) {
        c.iter_mut().for_each(|x| *x /= k.max(1) as f64);
    }
    features.iter().zip(labels).map(|(f, &l)| sq_dist(f, &centroids[l])).sum::<f64>() / features.len() as f64
}
