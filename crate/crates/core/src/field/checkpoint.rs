//! Binary model checkpoints.
//!
//! Layout, little-endian: magic `PFLD`, `u32` resolution, `u32` channel count,
//! six `f32` bounds (min xyz, max xyz), then `f32` grids in x-fastest corner
//! order: the SDF grid, each feature channel, the three raw color channels,
//! and finally `f32` inv_std.

use std::path::Path;

use super::grid::FieldModel;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PFLD";

pub fn write_checkpoint(model: &FieldModel) -> Vec<u8> {
    let corners = model.corner_count();
    let stride = model.stride();
    let mut out = Vec::with_capacity(36 + corners * stride * 4 + 4);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(model.resolution() as u32).to_le_bytes());
    out.extend_from_slice(&(model.n_channels() as u32).to_le_bytes());
    let b = model.bounds();
    for v in b.min.iter().chain(b.max.iter()) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let params = model.params();
    for ch in 0..stride {
        for c in 0..corners {
            out.extend_from_slice(&(params[c * stride + ch] as f32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(model.inv_std() as f32).to_le_bytes());
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> std::result::Result<FieldModel, String> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> std::result::Result<&[u8], String> {
        let s = bytes.get(pos..pos + n).ok_or("truncated checkpoint")?;
        pos += n;
        Ok(s)
    };
    if take(4)? != CHECKPOINT_MAGIC {
        return Err("bad magic".into());
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
    let f32_at = |s: &[u8]| f32::from_le_bytes(s.try_into().unwrap()) as f64;
    let resolution = u32_at(take(4)?);
    let n_channels = u32_at(take(4)?);
    let mut b = [0.0; 6];
    for v in b.iter_mut() {
        *v = f32_at(take(4)?);
    }
    let bounds = Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]));
    let mut model = FieldModel::zeros(resolution, n_channels, bounds).map_err(|e| e.to_string())?;
    let corners = model.corner_count();
    let stride = model.stride();
    let raster = take(corners * stride * 4)?;
    let params = model.params_mut();
    for ch in 0..stride {
        for c in 0..corners {
            let k = (ch * corners + c) * 4;
            params[c * stride + ch] = f32_at(&raster[k..k + 4]);
        }
    }
    let inv_std = f32_at(take(4)?);
    if !(inv_std > 0.0) {
        return Err(format!("invalid inv_std {inv_std}"));
    }
    if pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - pos));
    }
    model.set_log_inv_std(inv_std.ln());
    Ok(model)
}

pub fn save_checkpoint(model: &FieldModel, path: &Path) -> Result<()> {
    std::fs::write(path, write_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<FieldModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes).map_err(|r| Error::load(path, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldInit;

    #[test]
    fn round_trip_is_f32_exact() {
        let m = FieldModel::new(&FieldInit {
            resolution: 5,
            n_channels: 3,
            seed: 4,
            ..FieldInit::default()
        })
        .unwrap();
        let bytes = write_checkpoint(&m);
        let back = read_checkpoint(&bytes).unwrap();
        assert_eq!(back.resolution(), 5);
        assert_eq!(back.n_channels(), 3);
        for (a, b) in m.params().iter().zip(back.params()) {
            assert_eq!(*a as f32, *b as f32);
        }
        // a second round trip is bit-exact
        assert_eq!(write_checkpoint(&back), bytes);
        assert!((back.inv_std() - 10.0).abs() < 1e-5);
    }

    #[test]
    fn x_fastest_sdf_layout() {
        let mut m = FieldModel::zeros(1, 1, Aabb::cube(1.0)).unwrap();
        for c in 0..m.corner_count() {
            m.set_corner_sdf(c, c as f64);
        }
        let bytes = write_checkpoint(&m);
        let first = f32::from_le_bytes(bytes[36..40].try_into().unwrap());
        let second = f32::from_le_bytes(bytes[40..44].try_into().unwrap());
        assert_eq!((first, second), (0.0, 1.0));
        assert_eq!(m.corner_index(1, 0, 0), 1);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let m = FieldModel::zeros(2, 1, Aabb::cube(1.0)).unwrap();
        let bytes = write_checkpoint(&m);
        assert!(read_checkpoint(&bytes[..bytes.len() - 2]).is_err());
        assert!(read_checkpoint(b"XXXX").is_err());
    }
}
