//! k-means on Gaussian blobs with Davies-Bouldin picking k.

use partfield::segmentation::{davies_bouldin, farthest_point_init, kmeans};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> partfield::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let centers = [[0.0, 0.0, 0.0], [1.0, 0.2, 0.0], [0.3, 1.0, 0.5], [0.9, 0.9, 1.0]];
    let points: Vec<Vec<f64>> = (0..400)
        .map(|i| {
            let c = centers[i % centers.len()];
            c.iter().map(|x| x + 0.15 * (rng.random::<f64>() - 0.5)).collect()
        })
        .collect();

    let mut best = (f64::INFINITY, 0);
    for k in 2..=6 {
        let fit = kmeans(&points, k, &farthest_point_init(&points, k))?;
        let db = davies_bouldin(&points, &fit.labels)?;
        println!("k {k}: DB {db:.4} after {} iterations", fit.iterations);
        if db < best.0 {
            best = (db, k);
        }
    }
    println!("chosen k = {}", best.1);
    Ok(())
}
