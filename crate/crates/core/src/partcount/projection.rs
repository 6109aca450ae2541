use crate::image::ImageBuf;
use crate::scene::{Camera, NO_HIT};

/// Projects the pixels of a mask in view k into view k+1. A pixel survives if
/// it has depth, lands inside the target image on a pixel with depth, and is
/// not farther than that depth plus `eps_occ`. Returns sorted distinct target
/// pixels.
pub fn project_mask(
    mask_pixels: &[usize],
    depth_k: &ImageBuf<f64>,
    depth_k1: &ImageBuf<f64>,
    cam_k: &Camera,
    cam_k1: &Camera,
    eps_occ: f64,
) -> Vec<usize> {
    let center = cam_k1.center();
    let mut out: Vec<usize> = mask_pixels
        .iter()
        .filter_map(|&i| {
            let d = depth_k.data[i];
            if d == NO_HIT {
                return None;
            }
            let p = cam_k.unproject_pixel(i / depth_k.width, i % depth_k.width, d);
            let (row, col) = cam_k1.project_to_pixel(&p)?;
            let target = *depth_k1.get(row, col);
            if target == NO_HIT || (p - center).norm() > target + eps_occ {
                return None;
            }
            Some(depth_k1.index(row, col))
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
