use std::collections::HashMap;
use std::fmt::Write as _;

use super::projection::project_mask;
use crate::error::{Error, Result};
use crate::image::ImageBuf;
use crate::scene::{CameraRig, MaskSet, BACKGROUND_MASK};

/// Masks whose projection keeps less than this share of their pixels never match.
pub const VISIBILITY_FLOOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskVertex {
    pub view: usize,
    pub mask_id: u16,
    pub pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskEdge {
    pub a: usize,
    pub b: usize,
    /// Share of the projected mask covered by the target mask.
    pub r1: f64,
    /// Share of the target mask covered by the projection.
    pub r2: f64,
}

/// One vertex per (view, mask). Vertices are ordered by view, then by the
/// smallest pixel index of the mask, so the graph does not depend on how the
/// masks are numbered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MaskGraph {
    pub vertices: Vec<MaskVertex>,
    pub edges: Vec<MaskEdge>,
}

impl MaskGraph {
    /// Text form: `v <view> <mask_id> <pixels>` lines, then `e <v1> <v2> <r1> <r2>`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.view, v.mask_id, v.pixels);
        }
        for e in &self.edges {
            let _ = writeln!(s, "e {} {} {:.6} {:.6}", e.a, e.b, e.r1, e.r2);
        }
        s
    }

    pub fn total_pixels(&self) -> usize {
        self.vertices.iter().map(|v| v.pixels).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    edge: MaskEdge,
    visibility: f64,
}

/// Overlap ratios of every mask pair in neighboring views, computed once and
/// thresholded per τ.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTable {
    vertices: Vec<MaskVertex>,
    /// Pixels of each vertex in increasing order.
    pixels: Vec<Vec<usize>>,
    candidates: Vec<Candidate>,
}

/// Neighboring view pairs of a circular rig, wrap-around included.
pub fn neighbor_pairs(n_views: usize) -> Vec<(usize, usize)> {
    match n_views {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1), (1, 0)],
        n => (0..n).map(|k| (k, (k + 1) % n)).collect(),
    }
}

pub(crate) fn check_inputs(masks: &MaskSet, depths: &[ImageBuf<f64>], rig: &CameraRig) -> Result<()> {
    if masks.n_views() != rig.n_views() || depths.len() != rig.n_views() {
        return Err(Error::Consistency(format!(
            "rig has {} views but got {} mask maps and {} depth maps",
            rig.n_views(),
            masks.n_views(),
            depths.len()
        )));
    }
    let n = rig.image_size;
    let sized = |w: usize, h: usize| w == n && h == n;
    if !masks.views.iter().all(|m| sized(m.width, m.height)) || !depths.iter().all(|d| sized(d.width, d.height)) {
        return Err(Error::Consistency(format!("mask and depth maps must be {n}x{n}")));
    }
    Ok(())
}

impl OverlapTable {
    pub fn compute(masks: &MaskSet, depths: &[ImageBuf<f64>], rig: &CameraRig, eps_occ: f64) -> Result<Self> {
        check_inputs(masks, depths, rig)?;
        let mut vertices = Vec::new();
        let mut pixels = Vec::new();
        let mut first_vertex = Vec::with_capacity(masks.n_views());
        let mut lookup: Vec<HashMap<u16, usize>> = Vec::with_capacity(masks.n_views());
        for (view, m) in masks.views.iter().enumerate() {
            first_vertex.push(vertices.len());
            let mut order: Vec<u16> = Vec::new();
            let mut members: HashMap<u16, Vec<usize>> = HashMap::new();
            for (i, &id) in m.data.iter().enumerate() {
                if id == BACKGROUND_MASK {
                    continue;
                }
                members
                    .entry(id)
                    .or_insert_with(|| {
                        order.push(id);
                        Vec::new()
                    })
                    .push(i);
            }
            let mut ids = HashMap::new();
            for id in order {
                let px = members.remove(&id).unwrap();
                ids.insert(id, vertices.len());
                vertices.push(MaskVertex {
                    view,
                    mask_id: id,
                    pixels: px.len(),
                });
                pixels.push(px);
            }
            lookup.push(ids);
        }

        let mut candidates = Vec::new();
        for (k, k1) in neighbor_pairs(rig.n_views()) {
            let target = &masks.views[k1];
            let end = if k + 1 < first_vertex.len() { first_vertex[k + 1] } else { vertices.len() };
            for a in first_vertex[k]..end {
                let projected = project_mask(
                    &pixels[a],
                    &depths[k],
                    &depths[k1],
                    &rig.cameras[k],
                    &rig.cameras[k1],
                    eps_occ,
                );
                if projected.is_empty() {
                    continue;
                }
                let mut hits: HashMap<u16, usize> = HashMap::new();
                for &p in &projected {
                    let id = target.data[p];
                    if id != BACKGROUND_MASK {
                        *hits.entry(id).or_insert(0) += 1;
                    }
                }
                let mut found: Vec<(usize, usize)> = hits.into_iter().map(|(id, c)| (lookup[k1][&id], c)).collect();
                found.sort_unstable();
                for (b, inter) in found {
                    candidates.push(Candidate {
                        edge: MaskEdge {
                            a: a.min(b),
                            b: a.max(b),
                            r1: inter as f64 / projected.len() as f64,
                            r2: inter as f64 / vertices[b].pixels as f64,
                        },
                        visibility: projected.len() as f64 / vertices[a].pixels as f64,
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            pixels,
            candidates,
        })
    }

    pub fn vertices(&self) -> &[MaskVertex] {
        &self.vertices
    }

    /// Sorted pixels of vertex `v`.
    pub fn pixels(&self, v: usize) -> &[usize] {
        &self.pixels[v]
    }

    /// Graph with an edge wherever both ratios reach `tau` above the visibility floor.
    pub fn graph(&self, tau: f64) -> MaskGraph {
        let mut edges: Vec<MaskEdge> = self
            .candidates
            .iter()
            .filter(|c| c.edge.r1 >= tau && c.edge.r2 >= tau && c.visibility >= VISIBILITY_FLOOR)
            .map(|c| c.edge)
            .collect();
        edges.sort_by_key(|e| (e.a, e.b));
        edges.dedup_by_key(|e| (e.a, e.b));
        MaskGraph {
            vertices: self.vertices.clone(),
            edges,
        }
    }
}

/// Mask graph at a single threshold `tau` in (0, 1).
pub fn overlap_edges(
    masks: &MaskSet,
    depths: &[ImageBuf<f64>],
    rig: &CameraRig,
    tau: f64,
    eps_occ: f64,
) -> Result<MaskGraph> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("tau must lie in (0, 1), got {tau}")));
    }
    Ok(OverlapTable::compute(masks, depths, rig, eps_occ)?.graph(tau))
}
