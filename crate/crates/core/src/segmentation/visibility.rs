use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::ImageBuf;
use crate::meshing::LabeledMesh;
use crate::scene::{CameraRig, NO_HIT};

/// Marks vertices seen by at least one camera: the vertex projects inside the
/// image onto a pixel with depth, and its distance to the camera center is
/// within `eps_occ` of that depth.
pub fn visible_vertices(
    mesh: &LabeledMesh,
    depths: &[ImageBuf<f64>],
    rig: &CameraRig,
    eps_occ: f64,
) -> Result<Vec<bool>> {
    if depths.len() != rig.n_views() {
        return Err(Error::Consistency(format!(
            "{} depth maps for a rig of {} views",
            depths.len(),
            rig.n_views()
        )));
    }
    let mut seen = vec![false; mesh.n_vertices()];
    for (cam, depth) in rig.cameras.iter().zip(depths) {
        let center = cam.center();
        for (v, s) in mesh.vertices.iter().zip(seen.iter_mut()) {
            if *s {
                continue;
            }
            let Some((row, col)) = cam.project_to_pixel(v) else {
                continue;
            };
            if row >= depth.height || col >= depth.width {
                continue;
            }
            let d = *depth.get(row, col);
            if d != NO_HIT && ((v - center).norm() - d).abs() <= eps_occ {
                *s = true;
            }
        }
    }
    Ok(seen)
}

/// Extends labels from the vertices in `known` (sorted indices, one label
/// each) to the whole mesh. Unlabeled vertices take the label of the nearest
/// labeled vertex in edge hops, ties to the earlier source; vertices in mesh
/// components without any labeled vertex take the label of the nearest
/// labeled vertex in space.
pub fn propagate_labels(mesh: &LabeledMesh, known: &[usize], labels: &[usize]) -> Vec<usize> {
    assert_eq!(known.len(), labels.len());
    let n = mesh.n_vertices();
    let mut out = vec![usize::MAX; n];
    let mut queue = VecDeque::with_capacity(n);
    for (&i, &l) in known.iter().zip(labels) {
        out[i] = l;
        queue.push_back(i);
    }
    let adj = mesh.vertex_neighbors();
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            let j = j as usize;
            if out[j] == usize::MAX {
                out[j] = out[i];
                queue.push_back(j);
            }
        }
    }
    for i in 0..n {
        if out[i] != usize::MAX {
            continue;
        }
        let p = mesh.vertices[i];
        let nearest = known
            .iter()
            .zip(labels)
            .map(|(&k, &l)| ((mesh.vertices[k] - p).norm_squared(), l))
            .fold((f64::INFINITY, 0), |best, c| if c.0 < best.0 { c } else { best });
        out[i] = nearest.1;
    }
    out
}
