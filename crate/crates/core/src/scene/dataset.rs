//! On-disk dataset layout.
//!
//! ```text
//! cameras.txt            one line per view: focal cx cy r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
//! view_000_color.ppm     binary P6, 8-bit RGB
//! view_000_mask.pgm      binary P5, 16-bit big-endian; 0 = background, k = mask k
//! view_000_depth.txt     optional; ASCII floats row-major, -1 = no hit
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::camera::{Camera, CameraRig};
use super::masks::{MaskMap, MaskSet};
use super::render::{ViewRender, NO_HIT};
use crate::error::{Error, Result};
use crate::image::ImageBuf;

pub type ColorImage = ImageBuf<[u8; 3]>;

/// Calibrated images with view-local masks, as consumed by training and segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rig: CameraRig,
    pub colors: Vec<ColorImage>,
    pub masks: MaskSet,
    /// Ground-truth depth, when the producer had it.
    pub depths: Option<Vec<ImageBuf<f64>>>,
}

impl Dataset {
    pub fn n_views(&self) -> usize {
        self.rig.n_views()
    }

    pub fn image_size(&self) -> usize {
        self.rig.image_size
    }

    /// Builds a dataset from ground-truth renders, quantizing colors to 8 bits.
    pub fn from_renders(rig: CameraRig, renders: &[ViewRender], masks: MaskSet) -> Self {
        let colors = renders.iter().map(|r| quantize(&r.color)).collect();
        let depths = Some(renders.iter().map(|r| r.depth.clone()).collect());
        Self {
            rig,
            colors,
            masks,
            depths,
        }
    }

    /// Keeps only the listed views, in order.
    pub fn select_views(&self, views: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = views.iter().find(|&&v| v >= self.n_views()) {
            return Err(Error::invalid(format!("view {bad} out of range")));
        }
        let rig = CameraRig::from_cameras(views.iter().map(|&v| self.rig.cameras[v].clone()).collect())?;
        Ok(Dataset {
            rig,
            colors: views.iter().map(|&v| self.colors[v].clone()).collect(),
            masks: self.masks.select_views(views),
            depths: self
                .depths
                .as_ref()
                .map(|d| views.iter().map(|&v| d[v].clone()).collect()),
        })
    }

    /// Colors as floats in [0, 1].
    pub fn color_f64(&self, view: usize, pixel: usize) -> [f64; 3] {
        self.colors[view].data[pixel].map(|c| c as f64 / 255.0)
    }
}

pub fn quantize(color: &ImageBuf<[f64; 3]>) -> ColorImage {
    let data = color
        .data
        .iter()
        .map(|c| c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
        .collect();
    ImageBuf::from_vec(color.width, color.height, data)
}

fn view_path(dir: &Path, view: usize, suffix: &str) -> PathBuf {
    dir.join(format!("view_{view:03}_{suffix}"))
}

/// Writes the dataset layout into `dir` (created if needed).
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut cams = String::new();
    for c in &data.rig.cameras {
        let mut fields = vec![c.focal, c.cx, c.cy];
        fields.extend_from_slice(&c.extrinsic_row_major());
        let line: Vec<String> = fields.iter().map(|v| v.to_string()).collect();
        cams.push_str(&line.join(" "));
        cams.push('\n');
    }
    write_file(&dir.join("cameras.txt"), cams.as_bytes())?;
    for v in 0..data.n_views() {
        write_file(&view_path(dir, v, "color.ppm"), &encode_ppm(&data.colors[v]))?;
        write_file(&view_path(dir, v, "mask.pgm"), &encode_pgm16(&data.masks.views[v]))?;
        if let Some(depths) = &data.depths {
            write_file(&view_path(dir, v, "depth.txt"), encode_depth(&depths[v]).as_bytes())?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Reads a dataset directory written by [`write_dataset`] or an external producer.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let cam_path = dir.join("cameras.txt");
    let text = fs::read_to_string(&cam_path).map_err(|e| Error::io(&cam_path, e))?;
    let mut intrinsics = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::load(&cam_path, format!("line {}: {e}", lineno + 1)))?;
        if vals.len() != 15 {
            return Err(Error::load(
                &cam_path,
                format!("line {}: expected 15 values, found {}", lineno + 1, vals.len()),
            ));
        }
        intrinsics.push(vals);
    }
    if intrinsics.is_empty() {
        return Err(Error::load(&cam_path, "no cameras"));
    }

    let mut colors = Vec::new();
    let mut masks = Vec::new();
    let mut depths = Vec::new();
    let mut all_depths = true;
    let mut size = None;
    for v in 0..intrinsics.len() {
        let cpath = view_path(dir, v, "color.ppm");
        let color = decode_ppm(&read_bytes(&cpath)?).map_err(|r| Error::load(&cpath, r))?;
        let mpath = view_path(dir, v, "mask.pgm");
        let mask = decode_pgm(&read_bytes(&mpath)?).map_err(|r| Error::load(&mpath, r))?;
        if color.width != color.height {
            return Err(Error::load(&cpath, "images must be square"));
        }
        let n = *size.get_or_insert(color.width);
        if color.width != n {
            return Err(Error::load(&cpath, format!("size {} differs from view 0 size {n}", color.width)));
        }
        if mask.width != n || mask.height != n {
            return Err(Error::load(
                &mpath,
                format!("mask size {}x{} differs from color size {n}x{n}", mask.width, mask.height),
            ));
        }
        let dpath = view_path(dir, v, "depth.txt");
        if all_depths && dpath.exists() {
            let text = fs::read_to_string(&dpath).map_err(|e| Error::io(&dpath, e))?;
            depths.push(decode_depth(&text, n).map_err(|r| Error::load(&dpath, r))?);
        } else {
            all_depths = false;
        }
        colors.push(color);
        masks.push(mask);
    }
    let n = size.unwrap_or(0);
    let cameras = intrinsics
        .iter()
        .map(|vals| {
            let m: [f64; 12] = vals[3..15].try_into().expect("12 extrinsic values");
            Camera::from_row_major(vals[0], vals[1], vals[2], &m, n)
        })
        .collect();
    Ok(Dataset {
        rig: CameraRig::from_cameras(cameras)?,
        colors,
        masks: MaskSet { views: masks },
        depths: all_depths.then_some(depths),
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for px in &img.data {
        out.extend_from_slice(px);
    }
    out
}

/// 16-bit PGM. Maxval is the largest ID present, raised to 256 so the raster is
/// always two bytes per pixel.
pub fn encode_pgm16(mask: &MaskMap) -> Vec<u8> {
    let maxval = mask.data.iter().copied().max().unwrap_or(0).max(256);
    let mut out = format!("P5\n{} {}\n{}\n", mask.width, mask.height, maxval).into_bytes();
    for v in &mask.data {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

fn encode_depth(depth: &ImageBuf<f64>) -> String {
    let mut s = String::new();
    for row in depth.data.chunks(depth.width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

fn decode_depth(text: &str, n: usize) -> std::result::Result<ImageBuf<f64>, String> {
    let vals: Vec<f64> = text
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("bad depth value: {e}"))?;
    if vals.len() != n * n {
        return Err(format!("expected {} depth values, found {}", n * n, vals.len()));
    }
    if let Some(bad) = vals.iter().find(|v| !(**v >= 0.0 || **v == NO_HIT)) {
        return Err(format!("invalid depth {bad}"));
    }
    Ok(ImageBuf::from_vec(n, n, vals))
}

/// Parses a PNM header: magic, width, height, maxval. Returns the header fields and
/// the offset of the first raster byte.
fn parse_pnm_header(bytes: &[u8], magic: &[u8; 2]) -> std::result::Result<([usize; 3], usize), String> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(format!("not a {} file", String::from_utf8_lossy(magic)));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed header number")?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("malformed header terminator".into());
    }
    Ok((fields, pos + 1))
}

pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<ColorImage, String> {
    let ([w, h, maxval], start) = parse_pnm_header(bytes, b"P6")?;
    if maxval != 255 {
        return Err(format!("only 8-bit color is supported, maxval {maxval}"));
    }
    let raster = &bytes[start..];
    if raster.len() != w * h * 3 {
        return Err(format!("expected {} raster bytes, found {}", w * h * 3, raster.len()));
    }
    let data = raster.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(ImageBuf::from_vec(w, h, data))
}

/// Reads 8- or 16-bit P5 mask images. Values above maxval are rejected.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<MaskMap, String> {
    let ([w, h, maxval], start) = parse_pnm_header(bytes, b"P5")?;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(format!("invalid maxval {maxval}"));
    }
    let raster = &bytes[start..];
    let wide = maxval > 255;
    let expected = w * h * if wide { 2 } else { 1 };
    if raster.len() != expected {
        return Err(format!("expected {expected} raster bytes, found {}", raster.len()));
    }
    let data: Vec<u16> = if wide {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raster.iter().map(|&b| b as u16).collect()
    };
    if let Some(bad) = data.iter().find(|&&v| v as usize > maxval) {
        return Err(format!("mask value {bad} exceeds declared maxval {maxval}"));
    }
    Ok(ImageBuf::from_vec(w, h, data))
}
