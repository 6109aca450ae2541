use std::collections::{BTreeMap, VecDeque};

use crate::meshing::LabeledMesh;

/// Components below this share of all vertices are absorbed by a neighbor label.
pub const MIN_COMPONENT_FRACTION: f64 = 0.002;

/// Renumbers labels to 0.. in order of first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Connected pieces of each label over mesh edges joining equal labels,
/// ordered by smallest vertex.
fn label_components(adj: &[Vec<u32>], labels: &[usize]) -> Vec<Vec<usize>> {
    let n = labels.len();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                let w = w as usize;
                if !seen[w] && labels[w] == labels[v] {
                    seen[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Vertex outside the sorted set `piece` closest to any of its vertices;
/// ties to the lowest index.
fn nearest_outside(mesh: &LabeledMesh, piece: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (w, q) in mesh.vertices.iter().enumerate() {
        if piece.binary_search(&w).is_ok() {
            continue;
        }
        let d = piece
            .iter()
            .map(|&v| (mesh.vertices[v] - q).norm_squared())
            .fold(f64::INFINITY, f64::min);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((w, d));
        }
    }
    best.map(|(w, _)| w)
}

/// Gives every edge-connected piece of a label its own label, then folds
/// pieces smaller than [`MIN_COMPONENT_FRACTION`] into the label they border
/// most. Sizes count only `observed` vertices (all of them when none is
/// observed), so pieces whose labels were inferred rather than clustered do
/// not become parts. Output labels are numbered by first appearance.
pub fn split_connected(mesh: &LabeledMesh, labels: &[usize], observed: &[bool]) -> Vec<usize> {
    let n = mesh.n_vertices();
    assert_eq!(labels.len(), n, "one label per vertex");
    assert_eq!(observed.len(), n, "one observed flag per vertex");
    if n == 0 {
        return Vec::new();
    }
    let adj = mesh.vertex_neighbors();
    let comps = label_components(&adj, labels);
    let all = !observed.contains(&true);
    let size = |c: &[usize]| c.iter().filter(|&&v| all || observed[v]).count();
    let total = if all { n } else { observed.iter().filter(|&&o| o).count() };

    // The largest piece of each label keeps it; the rest get fresh labels.
    let mut largest: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, c) in comps.iter().enumerate() {
        let l = labels[c[0]];
        match largest.get(&l) {
            Some(&j) if (size(&comps[j]), comps[j].len()) >= (size(c), c.len()) => {}
            _ => {
                largest.insert(l, i);
            }
        }
    }
    let mut next = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = labels.to_vec();
    for (i, c) in comps.iter().enumerate() {
        if largest[&labels[c[0]]] != i {
            for &v in c {
                out[v] = next;
            }
            next += 1;
        }
    }

    let min_size = MIN_COMPONENT_FRACTION * total as f64;
    for c in &comps {
        if size(c) as f64 >= min_size {
            continue;
        }
        let own = out[c[0]];
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in c {
            for &w in &adj[v] {
                let lw = out[w as usize];
                if lw != own {
                    *votes.entry(lw).or_insert(0) += 1;
                }
            }
        }
        // Most votes; ties to the smallest label. A piece bordering no other
        // label (a separate mesh component) takes the label of the nearest
        // vertex outside it.
        let target = match votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
            Some((&t, _)) => Some(t),
            None => nearest_outside(mesh, c).map(|w| out[w]),
        };
        if let Some(t) = target {
            for &v in c {
                out[v] = t;
            }
        }
    }
    canonical_labels(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Aabb, Vec3};
    use crate::meshing::mesh_from_sdf;

    fn all_observed(mesh: &LabeledMesh) -> Vec<bool> {
        vec![true; mesh.n_vertices()]
    }

    fn two_spheres_mesh() -> LabeledMesh {
        mesh_from_sdf(
            |p| ((p - Vec3::new(-0.5, 0.0, 0.0)).norm() - 0.3).min((p - Vec3::new(0.5, 0.0, 0.0)).norm() - 0.3),
            &Aabb::cube(1.0),
            24,
        )
    }

    #[test]
    fn one_label_on_two_shells_becomes_two() {
        let mesh = two_spheres_mesh();
        let out = split_connected(&mesh, &vec![0; mesh.n_vertices()], &all_observed(&mesh));
        let mut distinct = out.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct, vec![0, 1]);
        for (v, l) in mesh.vertices.iter().zip(&out) {
            assert_eq!(*l, if v.x < 0.0 { 0 } else { 1 });
        }
    }

    #[test]
    fn connected_labels_are_unchanged() {
        let mesh = mesh_from_sdf(|p| p.norm() - 0.5, &Aabb::cube(1.0), 16);
        let labels: Vec<usize> = mesh.vertices.iter().map(|v| usize::from(v.y > 0.0)).collect();
        assert_eq!(split_connected(&mesh, &labels, &all_observed(&mesh)), canonical_labels(&labels));
    }

    #[test]
    fn random_labels_end_edge_connected() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mesh = mesh_from_sdf(|p| p.norm() - 0.5, &Aabb::cube(1.0), 12);
        let labels: Vec<usize> = (0..mesh.n_vertices()).map(|_| rng.random_range(0..4)).collect();
        let out = split_connected(&mesh, &labels, &all_observed(&mesh));
        let adj = mesh.vertex_neighbors();
        // Each output label must form exactly one connected piece.
        let comps = label_components(&adj, &out);
        let mut seen = std::collections::HashSet::new();
        for c in &comps {
            assert!(seen.insert(out[c[0]]), "label {} split in pieces", out[c[0]]);
        }
    }

    #[test]
    fn tiny_islands_are_absorbed() {
        let mesh = mesh_from_sdf(|p| p.norm() - 0.5, &Aabb::cube(1.0), 48);
        assert!(mesh.n_vertices() > 1000);
        let mut labels = vec![0; mesh.n_vertices()];
        labels[10] = 1;
        let out = split_connected(&mesh, &labels, &all_observed(&mesh));
        assert!(out.iter().all(|&l| l == 0));
    }

    #[test]
    fn detached_bubble_takes_nearest_label() {
        let mut mesh = mesh_from_sdf(|p| p.norm() - 0.5, &Aabb::cube(1.0), 48);
        let labels_main: Vec<usize> = mesh.vertices.iter().map(|v| usize::from(v.x > 0.0)).collect();
        // small closed tetrahedron just inside the x > 0 side
        let base = mesh.n_vertices() as u32;
        let c = Vec3::new(0.45, 0.0, 0.0);
        for d in [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.01], [-0.01, -0.01, -0.01]] {
            mesh.vertices.push(c + Vec3::new(d[0], d[1], d[2]));
        }
        for t in [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]] {
            mesh.triangles.push(t.map(|i| base + i));
        }
        let mut labels = labels_main.clone();
        labels.extend([7; 4]);
        let out = split_connected(&mesh, &labels, &all_observed(&mesh));
        let mut distinct = out.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 2);
        let positive_label = out[labels_main.iter().position(|&l| l == 1).unwrap()];
        assert!(out[base as usize..].iter().all(|&l| l == positive_label));
    }
    #[test]
    fn inferred_islands_are_absorbed() {
        let mesh = mesh_from_sdf(|p| p.norm() - 0.5, &Aabb::cube(1.0), 48);
        let cap: Vec<bool> = mesh.vertices.iter().map(|v| v.y < -0.4).collect();
        let labels: Vec<usize> = cap.iter().map(|&c| usize::from(c)).collect();
        let n_cap = cap.iter().filter(|&&c| c).count();
        assert!(n_cap as f64 > 10.0 * MIN_COMPONENT_FRACTION * mesh.n_vertices() as f64);
        assert_eq!(split_connected(&mesh, &labels, &all_observed(&mesh)), labels);

        // only one cap vertex was clustered; the rest were inferred from it
        let first = cap.iter().position(|&c| c).unwrap();
        let observed: Vec<bool> = (0..mesh.n_vertices()).map(|i| !cap[i] || i == first).collect();
        assert!(split_connected(&mesh, &labels, &observed).iter().all(|&l| l == 0));
    }
}
