use std::collections::HashMap;

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::field::FieldModel;
use crate::geom::{triangle_area, Aabb, Vec3};

/// Label of a vertex not yet assigned to a part.
pub const UNASSIGNED: i32 = -1;

/// Triangle mesh with optional per-vertex features and part labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Empty until features are attached; otherwise one vector per vertex.
    pub vertex_features: Vec<Vec<f64>>,
    pub vertex_labels: Vec<i32>,
}

impl LabeledMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_features(&self) -> bool {
        !self.vertex_features.is_empty() && self.vertex_features.len() == self.vertices.len()
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        self.vertices.iter().for_each(|v| b.grow(v));
        b
    }

    /// Removes vertices no triangle uses, keeping the order of the rest.
    pub fn drop_unreferenced(&mut self) {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i as usize] = true;
            }
        }
        if used.iter().all(|u| *u) {
            return;
        }
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut next = 0u32;
        for (i, u) in used.iter().enumerate() {
            if *u {
                remap[i] = next;
                next += 1;
            }
        }
        let keep = |i: usize| used[i];
        self.vertices = self.vertices.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| *v).collect();
        if self.vertex_features.len() == used.len() {
            self.vertex_features = std::mem::take(&mut self.vertex_features)
                .into_iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, f)| f)
                .collect();
        }
        if self.vertex_labels.len() == used.len() {
            self.vertex_labels = self.vertex_labels.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, l)| *l).collect();
        }
        for t in &mut self.triangles {
            for i in t.iter_mut() {
                *i = remap[*i as usize];
            }
        }
    }

    /// Triangle-connected components as sorted vertex lists, largest first.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let n = self.vertices.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn root(parent: &mut [u32], mut i: u32) -> u32 {
            while parent[i as usize] != i {
                parent[i as usize] = parent[parent[i as usize] as usize];
                i = parent[i as usize];
            }
            i
        }
        for t in &self.triangles {
            for k in 1..3 {
                let (a, b) = (root(&mut parent, t[0]), root(&mut parent, t[k]));
                if a != b {
                    parent[a.max(b) as usize] = a.min(b);
                }
            }
        }
        let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
        for i in 0..n as u32 {
            let r = root(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<u32>> = groups.into_values().collect();
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        out
    }

    /// Drops connected components with fewer than `min_fraction` of the
    /// vertices. Returns the number of components removed.
    pub fn remove_small_components(&mut self, min_fraction: f64) -> usize {
        let min = (min_fraction * self.vertices.len() as f64).ceil() as usize;
        let mut keep = vec![true; self.vertices.len()];
        let mut removed = 0;
        for c in self.components() {
            if c.len() < min {
                removed += 1;
                c.iter().for_each(|&i| keep[i as usize] = false);
            }
        }
        if removed > 0 {
            self.triangles.retain(|t| keep[t[0] as usize]);
            self.drop_unreferenced();
        }
        removed
    }

    fn directed_edges(&self) -> HashMap<(u32, u32), usize> {
        let mut m = HashMap::with_capacity(self.triangles.len() * 3);
        for t in &self.triangles {
            for k in 0..3 {
                *m.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        m
    }

    fn undirected_edges(&self) -> HashMap<(u32, u32), usize> {
        let mut m = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.is_empty() && self.undirected_edges().values().all(|&c| c == 2)
    }

    /// Every directed edge occurs once, so neighbours agree on winding.
    pub fn is_consistently_oriented(&self) -> bool {
        self.directed_edges().values().all(|&c| c == 1)
    }

    /// V - E + F over the vertices used by triangles.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i as usize] = true;
            }
        }
        let v = used.iter().filter(|u| **u).count() as i64;
        v - self.undirected_edges().len() as i64 + self.triangles.len() as i64
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| {
            let [a, b, c] = self.triangle(t);
            triangle_area(&a, &b, &c)
        }).sum()
    }

    /// Area-weighted uniform samples on the surface.
    pub fn sample_surface<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec3> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(t);
            total += triangle_area(&a, &b, &c);
            cumulative.push(total);
        }
        (0..n)
            .map(|_| {
                let r = rng.random::<f64>() * total;
                let t = cumulative.partition_point(|&c| c <= r).min(self.triangles.len() - 1);
                let [a, b, c] = self.triangle(t);
                let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }

    /// Label of each triangle: the most common label among its vertices,
    /// ties going to the smallest.
    pub fn triangle_labels(&self) -> Vec<i32> {
        self.triangles
            .iter()
            .map(|t| {
                let l = t.map(|i| self.vertex_labels.get(i as usize).copied().unwrap_or(UNASSIGNED));
                if l[1] == l[2] && l[0] != l[1] {
                    l[1]
                } else if l[0] == l[1] || l[0] == l[2] {
                    l[0]
                } else {
                    *l.iter().min().unwrap()
                }
            })
            .collect()
    }

    /// Distinct assigned labels in increasing order.
    pub fn labels(&self) -> Vec<i32> {
        let mut l: Vec<i32> = self.vertex_labels.iter().copied().filter(|&l| l != UNASSIGNED).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Vertex adjacency lists from triangle edges, each sorted.
    pub fn vertex_neighbors(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Sets each vertex feature to the L2-normalized feature field at the vertex;
/// zero vectors stay zero.
pub fn attach_features(model: &FieldModel, mesh: &mut LabeledMesh) {
    mesh.vertex_features = mesh
        .vertices
        .iter()
        .map(|v| {
            let mut f = model.field_at(v).feature;
            let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                f.iter_mut().for_each(|x| *x /= norm);
            }
            f
        })
        .collect();
    if mesh.vertex_labels.len() != mesh.vertices.len() {
        mesh.vertex_labels = vec![UNASSIGNED; mesh.vertices.len()];
    }
}
