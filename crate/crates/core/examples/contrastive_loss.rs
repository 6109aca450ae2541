//! InfoNCE on hand-made features: tight positives give a low loss, and
//! rescaling every feature leaves it unchanged.

use partfield::training::{info_nce, info_nce_with_grad};

fn main() {
    let q = [1.0, 0.1, 0.0];
    let near = [[0.9, 0.2, 0.0], [1.0, 0.0, 0.1]];
    let far = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, 0.0, 0.0]];
    let pos: Vec<&[f64]> = near.iter().map(|v| v.as_slice()).collect();
    let neg: Vec<&[f64]> = far.iter().map(|v| v.as_slice()).collect();

    for t in [0.05, 0.07, 0.2, 1.0] {
        println!("temperature {t}: loss {:.4e}", info_nce(&q, &pos, &neg, t));
    }
    // swapping roles makes the loss large
    println!("swapped: loss {:.4e}", info_nce(&q, &neg, &pos, 0.07));

    let scaled: Vec<f64> = q.iter().map(|x| x * 40.0).collect();
    println!("query x40: loss {:.4e}", info_nce(&scaled, &pos, &neg, 0.07));

    let g = info_nce_with_grad(&q, &pos, &neg, 0.07);
    println!("d loss / d query = {:?}", g.query);
}
