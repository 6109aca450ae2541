use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Pinhole camera. Camera frame: x right, y down, z forward. Pixel `(row, col)`
/// has its center at image coordinates `(col + 0.5, row + 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: Matrix3<f64>,
    /// World-to-camera translation.
    pub translation: Vec3,
    pub image_size: usize,
}

impl Camera {
    /// Camera at `eye` looking at `target` with world +y as up.
    pub fn look_at(eye: Vec3, target: Vec3, focal: f64, image_size: usize) -> Self {
        let forward = (target - eye).normalize();
        let mut right = forward.cross(&Vec3::y());
        if right.norm() < 1e-12 {
            right = Vec3::x();
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        let c = image_size as f64 / 2.0;
        Self {
            focal,
            cx: c,
            cy: c,
            rotation,
            translation,
            image_size,
        }
    }

    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Continuous image coordinates `(u, v)` and camera-frame z of a world point.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64, f64)> {
        let q = self.to_camera(p);
        if q.z <= 1e-12 {
            return None;
        }
        Some((
            self.focal * q.x / q.z + self.cx,
            self.focal * q.y / q.z + self.cy,
            q.z,
        ))
    }

    /// Pixel containing the projection of `p`, if inside the image.
    pub fn project_to_pixel(&self, p: &Vec3) -> Option<(usize, usize)> {
        let (u, v, _) = self.project(p)?;
        let n = self.image_size as f64;
        if !(0.0..n).contains(&u) || !(0.0..n).contains(&v) {
            return None;
        }
        Some((v.floor() as usize, u.floor() as usize))
    }

    /// Unit world-space direction through a continuous image point.
    pub fn direction_at(&self, u: f64, v: f64) -> Vec3 {
        let d = Vec3::new((u - self.cx) / self.focal, (v - self.cy) / self.focal, 1.0);
        (self.rotation.transpose() * d).normalize()
    }

    /// Ray through the center of pixel `(row, col)`: `(origin, unit direction)`.
    pub fn pixel_ray(&self, row: usize, col: usize) -> (Vec3, Vec3) {
        (
            self.center(),
            self.direction_at(col as f64 + 0.5, row as f64 + 0.5),
        )
    }

    /// World point at ray depth `depth` (distance along the unit ray) through pixel `(row, col)`.
    pub fn unproject_pixel(&self, row: usize, col: usize, depth: f64) -> Vec3 {
        let (o, d) = self.pixel_ray(row, col);
        o + d * depth
    }

    /// Azimuth in degrees of the camera center, measured from +x counter-clockwise
    /// about +y, in `[0, 360)`.
    pub fn azimuth_deg(&self) -> f64 {
        let c = self.center();
        let a = (-c.z).atan2(c.x).to_degrees();
        if a < 0.0 {
            a + 360.0
        } else {
            a
        }
    }

    pub fn elevation_deg(&self) -> f64 {
        let c = self.center();
        (c.y / c.norm()).asin().to_degrees()
    }

    /// Three-by-four world-to-camera matrix in row-major order.
    pub fn extrinsic_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t[0],
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t[1],
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t[2],
        ]
    }

    pub fn from_row_major(focal: f64, cx: f64, cy: f64, m: &[f64; 12], image_size: usize) -> Self {
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        Self {
            focal,
            cx,
            cy,
            rotation,
            translation: Vec3::new(m[3], m[7], m[11]),
            image_size,
        }
    }
}

/// Calibrated views on a circular rig around the origin. Equality compares the
/// cameras only; elevation and radius are descriptive.
#[derive(Debug, Clone)]
pub struct CameraRig {
    pub cameras: Vec<Camera>,
    pub elevation_deg: f64,
    pub radius: f64,
    pub image_size: usize,
}

impl PartialEq for CameraRig {
    fn eq(&self, other: &Self) -> bool {
        self.cameras == other.cameras
    }
}

impl CameraRig {
    pub fn n_views(&self) -> usize {
        self.cameras.len()
    }

    /// Rig from explicit cameras; elevation and radius are read off the first view.
    pub fn from_cameras(cameras: Vec<Camera>) -> Result<Self> {
        let first = cameras
            .first()
            .ok_or_else(|| Error::invalid("rig needs at least one camera"))?;
        let image_size = first.image_size;
        if cameras.iter().any(|c| c.image_size != image_size) {
            return Err(Error::invalid("cameras disagree on image size"));
        }
        Ok(Self {
            elevation_deg: first.elevation_deg(),
            radius: first.center().norm(),
            image_size,
            cameras,
        })
    }

    /// Keeps every `step`-th view starting at view 0.
    pub fn subsample(&self, step: usize) -> Vec<usize> {
        (0..self.n_views()).step_by(step.max(1)).collect()
    }
}

/// Cameras at azimuths `k * 360 / n_views` (from +x, counter-clockwise about +y),
/// all at the given elevation and distance, looking at the origin.
pub fn make_camera_rig(
    n_views: usize,
    elevation_deg: f64,
    radius: f64,
    image_size: usize,
    fov_deg: f64,
) -> Result<CameraRig> {
    if n_views == 0 {
        return Err(Error::invalid("n_views must be at least 1"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    if image_size == 0 {
        return Err(Error::invalid("image_size must be positive"));
    }
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::invalid(format!("fov must lie in (0, 180), got {fov_deg}")));
    }
    if !(elevation_deg.abs() < 90.0) {
        return Err(Error::invalid(format!(
            "elevation must lie in (-90, 90), got {elevation_deg}"
        )));
    }
    let focal = image_size as f64 / 2.0 / (fov_deg.to_radians() / 2.0).tan();
    let el = elevation_deg.to_radians();
    let cameras = (0..n_views)
        .map(|k| {
            let az = (k as f64 * 360.0 / n_views as f64).to_radians();
            let eye = Vec3::new(
                radius * el.cos() * az.cos(),
                radius * el.sin(),
                -radius * el.cos() * az.sin(),
            );
            Camera::look_at(eye, Vec3::zeros(), focal, image_size)
        })
        .collect();
    Ok(CameraRig {
        cameras,
        elevation_deg,
        radius,
        image_size,
    })
}
