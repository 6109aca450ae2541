use super::components::PartEstimate;
use super::graph::{check_inputs, OverlapTable};
use crate::error::Result;
use crate::image::ImageBuf;
use crate::scene::{CameraRig, MaskSet, NO_HIT};

/// Squared 1D distance transform of sampled function `f` (lower envelope of parabolas).
fn dt1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        loop {
            let p = v[k];
            if f[p] == f64::INFINITY {
                // Replace an infinite parabola outright.
                v[k] = q;
                z[k + 1] = f64::INFINITY;
                break;
            }
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        out[q] = if f[p] == f64::INFINITY { f64::INFINITY } else { d * d + f[p] };
    }
}

/// Euclidean distance from each pixel inside `inside` to the nearest pixel
/// outside it, where everything beyond the image border counts as outside.
/// Pixels outside the region get 0.
pub fn inner_distance_transform(inside: &ImageBuf<bool>) -> ImageBuf<f64> {
    let (w, h) = (inside.width + 2, inside.height + 2);
    let mut g = vec![0.0; w * h];
    for r in 0..inside.height {
        for c in 0..inside.width {
            if *inside.get(r, c) {
                g[(r + 1) * w + c + 1] = f64::INFINITY;
            }
        }
    }
    let m = w.max(h);
    let (mut f, mut out) = (vec![0.0; m], vec![0.0; m]);
    let (mut v, mut z) = (vec![0usize; m], vec![0.0; m + 1]);
    for c in 0..w {
        for r in 0..h {
            f[r] = g[r * w + c];
        }
        dt1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for r in 0..h {
            g[r * w + c] = out[r];
        }
    }
    for r in 0..h {
        f[..w].copy_from_slice(&g[r * w..(r + 1) * w]);
        dt1d(&f[..w], &mut out[..w], &mut v, &mut z);
        g[r * w..(r + 1) * w].copy_from_slice(&out[..w]);
    }
    let mut res = ImageBuf::filled(inside.width, inside.height, 0.0);
    for r in 0..inside.height {
        for c in 0..inside.width {
            res.set(r, c, g[(r + 1) * w + c + 1].sqrt());
        }
    }
    res
}

/// Pixel of the region farthest from its boundary; ties go to the lowest row,
/// then column. `None` for an empty region.
pub fn interior_pixel(pixels: &[usize], width: usize, height: usize) -> Option<usize> {
    let mut inside = ImageBuf::filled(width, height, false);
    for &p in pixels {
        inside.data[p] = true;
    }
    let dt = inner_distance_transform(&inside);
    let mut best: Option<(usize, f64)> = None;
    for &p in pixels {
        let d = dt.data[p];
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((p, d));
        }
    }
    best.map(|(p, _)| p)
}

/// Places one seed per component: the interior pixel of its largest mask with
/// valid depth, lifted to 3D. Components with no usable mask are dropped.
pub fn seed_points(
    estimate: &PartEstimate,
    table: &OverlapTable,
    masks: &MaskSet,
    depths: &[ImageBuf<f64>],
    rig: &CameraRig,
) -> Result<PartEstimate> {
    check_inputs(masks, depths, rig)?;
    let n = rig.image_size;
    let mut out = PartEstimate {
        n_parts_raw: estimate.n_parts_raw,
        ..PartEstimate::default()
    };
    for comp in &estimate.components {
        let mut by_size = comp.clone();
        // Largest first; ties keep vertex order.
        by_size.sort_by_key(|&v| std::cmp::Reverse(table.vertices()[v].pixels));
        let seed = by_size.iter().find_map(|&v| {
            let view = table.vertices()[v].view;
            let p = interior_pixel(table.pixels(v), n, n)?;
            let d = depths[view].data[p];
            (d != NO_HIT).then(|| rig.cameras[view].unproject_pixel(p / n, p % n, d))
        });
        match seed {
            Some(s) => {
                out.components.push(comp.clone());
                out.seed_points.push(s);
            }
            None => log::warn!("no mask of component starting at vertex {} has depth; dropped", comp[0]),
        }
    }
    out.n_parts = out.components.len();
    Ok(out)
}
