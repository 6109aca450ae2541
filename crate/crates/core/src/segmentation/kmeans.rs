use crate::error::{Error, Result};

/// Lloyd iterations stop here even without a fixpoint.
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Number of distinct vectors, compared bitwise.
pub fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points.iter().map(|p| p.iter().map(|x| x.to_bits()).collect()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Nearest center, ties to the lowest index.
pub(crate) fn nearest(p: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize]) -> bool {
    let mut changed = false;
    for (l, p) in labels.iter_mut().zip(points) {
        let k = nearest(p, centers);
        if *l != k {
            *l = k;
            changed = true;
        }
    }
    changed
}

/// Lloyd's algorithm from the given centers. An emptied cluster is reseeded
/// with the point farthest from its own center (ties to the lowest index).
pub fn kmeans(points: &[Vec<f64>], k: usize, init: &[Vec<f64>]) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if init.len() != k {
        return Err(Error::invalid(format!("expected {k} initial centers, got {}", init.len())));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::invalid(format!("k = {k} exceeds the {distinct} distinct points")));
    }
    let dim = points[0].len();
    if points.iter().chain(init).any(|p| p.len() != dim) {
        return Err(Error::invalid("feature dimensions differ"));
    }
    let mut centers = init.to_vec();
    let mut labels = vec![usize::MAX; points.len()];
    assign(points, &centers, &mut labels);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let mut taken = vec![false; points.len()];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut best = (usize::MAX, -1.0);
            for (i, p) in points.iter().enumerate() {
                if taken[i] {
                    continue;
                }
                let d = sq_dist(p, &centers[labels[i]]);
                if d > best.1 {
                    best = (i, d);
                }
            }
            taken[best.0] = true;
            centers[c] = points[best.0].clone();
        }
        let changed = assign(points, &centers, &mut labels);
        if !changed || iterations >= MAX_ITERATIONS {
            break;
        }
    }
    Ok(KMeansResult {
        labels,
        centers,
        iterations,
    })
}

/// Deterministic spread-out centers: the first point, then repeatedly the
/// point farthest from all chosen ones.
pub fn farthest_point_init(points: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    if points.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut chosen = vec![points[0].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[0])).collect();
    while chosen.len() < k {
        let (i, _) = dist
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        chosen.push(points[i].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[i]));
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller.
        let u: f64 = rng.random::<f64>().max(1e-300);
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 2.0]];
        let r = kmeans(&pts, 1, &[vec![9.0, 9.0]]).unwrap();
        assert_eq!(r.labels, vec![0, 0, 0]);
        assert!((r.centers[0][0] - 2.0).abs() < 1e-12 && (r.centers[0][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = 0.1;
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for i in 0..200 {
            let c = i % 2;
            let off = c as f64 * 10.0 * sigma;
            pts.push(vec![off + sigma * gaussian(&mut rng), sigma * gaussian(&mut rng)]);
            truth.push(c);
        }
        let r = kmeans(&pts, 2, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(r.labels, truth);
    }

    #[test]
    fn result_is_a_fixpoint_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let init = farthest_point_init(&pts, 4);
        let r = kmeans(&pts, 4, &init).unwrap();
        assert!(r.iterations < MAX_ITERATIONS);
        let mut again = r.labels.clone();
        assert!(!assign(&pts, &r.centers, &mut again));
        assert_eq!(r, kmeans(&pts, 4, &init).unwrap());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        let pts = vec![vec![0.0], vec![0.1], vec![5.0], vec![5.2]];
        // Both centers start on the left; the second one is never nearest.
        let r = kmeans(&pts, 2, &[vec![0.0], vec![-100.0]]).unwrap();
        assert_eq!(r.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn too_many_clusters_rejected() {
        let pts = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(kmeans(&pts, 3, &[vec![1.0], vec![2.0], vec![3.0]]).is_err());
        assert!(kmeans(&pts, 0, &[]).is_err());
    }
}
