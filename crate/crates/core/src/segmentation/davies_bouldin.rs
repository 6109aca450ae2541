use crate::error::{Error, Result};

/// Davies-Bouldin index: mean over clusters of the worst ratio of summed
/// scatter to centroid distance. Coincident centroids give `+inf`.
pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::invalid("points and labels differ in length"));
    }
    let m = labels.iter().max().map_or(0, |l| l + 1);
    if m < 2 {
        return Err(Error::invalid("need at least two clusters"));
    }
    let dim = points[0].len();
    let mut centroids = vec![vec![0.0; dim]; m];
    let mut counts = vec![0usize; m];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (c, x) in centroids[l].iter_mut().zip(p) {
            *c += x;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("cluster {empty} is empty")));
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        c.iter_mut().for_each(|x| *x /= n as f64);
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let mut scatter = vec![0.0; m];
    for (p, &l) in points.iter().zip(labels) {
        scatter[l] += dist(p, &centroids[l]);
    }
    for (s, &n) in scatter.iter_mut().zip(&counts) {
        *s /= n as f64;
    }
    let mut total = 0.0;
    for i in 0..m {
        let mut worst: f64 = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let d = dist(&centroids[i], &centroids[j]);
            if d == 0.0 {
                return Ok(f64::INFINITY);
            }
            worst = worst.max((scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    Ok(total / m as f64)
}
