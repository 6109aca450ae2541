use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::meshing::LabeledMesh;
use crate::scene::Scene;

fn distinct(labels: &[i32]) -> Vec<i32> {
    let mut d = labels.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

/// Counts of (prediction, ground truth) label pairs, rows and columns in
/// ascending label order.
pub fn confusion_matrix(pred: &[i32], gt: &[i32]) -> (Vec<i32>, Vec<i32>, Vec<Vec<u64>>) {
    assert_eq!(pred.len(), gt.len(), "label vectors differ in length");
    let rows = distinct(pred);
    let cols = distinct(gt);
    let mut m = vec![vec![0u64; cols.len()]; rows.len()];
    for (p, g) in pred.iter().zip(gt) {
        let r = rows.binary_search(p).expect("label present");
        let c = cols.binary_search(g).expect("label present");
        m[r][c] += 1;
    }
    (rows, cols, m)
}

/// Fraction of vertices whose predicted label agrees with the ground truth
/// under the best one-to-one matching of labels. Unmatched labels count as
/// wrong. 0 for empty input.
pub fn label_accuracy(pred: &[i32], gt: &[i32]) -> f64 {
    if pred.is_empty() {
        assert!(gt.is_empty(), "label vectors differ in length");
        return 0.0;
    }
    let (_, _, m) = confusion_matrix(pred, gt);
    let k = m.len().max(m[0].len());
    let mut square = Matrix::new(k, k, 0i64);
    for (r, row) in m.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            square[(r, c)] = v as i64;
        }
    }
    let (matched, _) = kuhn_munkres(&square);
    matched as f64 / pred.len() as f64
}

/// Ground-truth part label of every mesh vertex: the label of the primitive
/// whose SDF is smallest there.
pub fn ground_truth_labels(mesh: &LabeledMesh, scene: &Scene) -> Vec<i32> {
    mesh.vertices.iter().map(|v| scene.sdf(v).1 as i32).collect()
}
