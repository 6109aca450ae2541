use super::graph::MaskGraph;
use crate::geom::Vec3;

/// Components holding less than this share of all mask pixels are noise.
pub const NOISE_FLOOR: f64 = 0.005;

/// Part count with the mask-graph components behind it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartEstimate {
    pub n_parts: usize,
    /// Component count before the noise floor.
    pub n_parts_raw: usize,
    /// Vertex indices per kept component, each sorted, ordered by first vertex.
    pub components: Vec<Vec<usize>>,
    /// One point per component once seeds are placed.
    pub seed_points: Vec<Vec3>,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// All components of the graph, each sorted, ordered by smallest vertex.
pub fn graph_components(graph: &MaskGraph) -> Vec<Vec<usize>> {
    let n = graph.vertices.len();
    let mut uf = UnionFind::new(n);
    for e in &graph.edges {
        uf.union(e.a, e.b);
    }
    let mut slot = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let r = uf.find(v);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[r]].push(v);
    }
    comps
}

/// Components of the graph with those below `noise_floor` of the total mask
/// pixels discarded.
pub fn connected_components(graph: &MaskGraph, noise_floor: f64) -> PartEstimate {
    let all = graph_components(graph);
    let total = graph.total_pixels() as f64;
    let n_parts_raw = all.len();
    let components: Vec<Vec<usize>> = all
        .into_iter()
        .filter(|c| c.iter().map(|&v| graph.vertices[v].pixels).sum::<usize>() as f64 >= noise_floor * total)
        .collect();
    PartEstimate {
        n_parts: components.len(),
        n_parts_raw,
        components,
        seed_points: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partcount::{MaskEdge, MaskVertex};
    use rand::{RngExt, SeedableRng};

    fn graph(n: usize, edges: &[(usize, usize)], pixels: usize) -> MaskGraph {
        MaskGraph {
            vertices: (0..n)
                .map(|i| MaskVertex {
                    view: i,
                    mask_id: 1,
                    pixels,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|&(a, b)| MaskEdge {
                    a,
                    b,
                    r1: 1.0,
                    r2: 1.0,
                })
                .collect(),
        }
    }

    fn bfs_labels(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            let mut queue = std::collections::VecDeque::from([s]);
            label[s] = next;
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    #[test]
    fn edgeless_and_chained() {
        assert_eq!(connected_components(&graph(5, &[], 10), NOISE_FLOOR).n_parts, 5);
        let chain: Vec<_> = (0..4).map(|i| (i, i + 1)).collect();
        assert_eq!(connected_components(&graph(5, &chain, 10), NOISE_FLOOR).n_parts, 1);
    }

    #[test]
    fn agrees_with_bfs_on_random_graphs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.random_range(1..60);
            let m = rng.random_range(0..n * 2);
            let edges: Vec<(usize, usize)> = (0..m)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .filter(|(a, b)| a != b)
                .collect();
            let comps = graph_components(&graph(n, &edges, 1));
            let bfs = bfs_labels(n, &edges);
            let mut ours = vec![0; n];
            for (k, c) in comps.iter().enumerate() {
                for &v in c {
                    ours[v] = k;
                }
            }
            // BFS numbers components by smallest vertex, as does ours.
            assert_eq!(ours, bfs);
        }
    }

    #[test]
    fn noise_floor_drops_tiny_components() {
        let mut g = graph(3, &[(0, 1)], 1000);
        g.vertices[2].pixels = 5;
        let est = connected_components(&g, NOISE_FLOOR);
        assert_eq!(est.n_parts_raw, 2);
        assert_eq!(est.n_parts, 1);
        assert_eq!(est.components, vec![vec![0, 1]]);
    }
}
