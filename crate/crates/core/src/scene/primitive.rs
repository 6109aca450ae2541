use std::f64::consts::PI;

use nalgebra::Rotation3;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    /// size = [radius]
    Sphere,
    /// size = [half_x, half_y, half_z]
    Box,
    /// size = [radius, half_length]; segment along local y
    Capsule,
    /// size = [radius, half_height]; axis along local y
    Cylinder,
}

impl PrimitiveKind {
    pub fn size_len(self) -> usize {
        match self {
            PrimitiveKind::Sphere => 1,
            PrimitiveKind::Box => 3,
            PrimitiveKind::Capsule | PrimitiveKind::Cylinder => 2,
        }
    }
}

/// Rigid transform mapping local primitive coordinates to world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub translation: Vec3,
}

impl Pose {
    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation,
        }
    }

    /// XYZ Euler angles in degrees (applied x first).
    pub fn from_euler_deg(translation: Vec3, euler_deg: [f64; 3]) -> Self {
        let [rx, ry, rz] = euler_deg.map(f64::to_radians);
        Self {
            rotation: Rotation3::from_euler_angles(rx, ry, rz),
            translation,
        }
    }

    #[inline]
    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse_transform_vector(&(p - self.translation))
    }

    #[inline]
    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub pose: Pose,
    pub size: Vec<f64>,
    pub part_label: u32,
    pub albedo: [f64; 3],
}

impl Primitive {
    pub fn new(
        kind: PrimitiveKind,
        pose: Pose,
        size: Vec<f64>,
        part_label: u32,
        albedo: [f64; 3],
    ) -> Result<Self> {
        if size.len() != kind.size_len() {
            return Err(Error::invalid(format!(
                "{kind:?} expects {} size values, got {}",
                kind.size_len(),
                size.len()
            )));
        }
        if size.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid(format!(
                "primitive sizes must be strictly positive, got {size:?}"
            )));
        }
        if albedo.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid(format!("albedo outside [0,1]: {albedo:?}")));
        }
        Ok(Self {
            kind,
            pose,
            size,
            part_label,
            albedo,
        })
    }

    pub fn sphere(center: Vec3, radius: f64, part_label: u32, albedo: [f64; 3]) -> Result<Self> {
        Self::new(
            PrimitiveKind::Sphere,
            Pose::from_translation(center),
            vec![radius],
            part_label,
            albedo,
        )
    }

    /// Exact signed distance to the primitive surface.
    pub fn sdf(&self, p: &Vec3) -> f64 {
        let q = self.pose.to_local(p);
        let s = &self.size;
        match self.kind {
            PrimitiveKind::Sphere => q.norm() - s[0],
            PrimitiveKind::Box => {
                let d = q.abs() - Vec3::new(s[0], s[1], s[2]);
                let outside = d.sup(&Vec3::zeros()).norm();
                let inside = d.max().min(0.0);
                outside + inside
            }
            PrimitiveKind::Capsule => {
                let y = q.y.clamp(-s[1], s[1]);
                (q - Vec3::new(0.0, y, 0.0)).norm() - s[0]
            }
            PrimitiveKind::Cylinder => {
                let dx = (q.x * q.x + q.z * q.z).sqrt() - s[0];
                let dy = q.y.abs() - s[1];
                let outside = (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt();
                outside + dx.max(dy).min(0.0)
            }
        }
    }

    /// Radius of a world-space sphere around the pose origin enclosing the primitive.
    pub fn bounding_radius(&self) -> f64 {
        let s = &self.size;
        match self.kind {
            PrimitiveKind::Sphere => s[0],
            PrimitiveKind::Box => (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt(),
            PrimitiveKind::Capsule => s[0] + s[1],
            PrimitiveKind::Cylinder => (s[0] * s[0] + s[1] * s[1]).sqrt(),
        }
    }

    /// Tight world-space bounding box.
    pub fn world_aabb(&self) -> Aabb {
        let s = &self.size;
        let c = self.pose.translation;
        let half = match self.kind {
            PrimitiveKind::Sphere => Vec3::repeat(s[0]),
            PrimitiveKind::Box => {
                let m = self.pose.rotation.matrix().abs();
                m * Vec3::new(s[0], s[1], s[2])
            }
            PrimitiveKind::Capsule | PrimitiveKind::Cylinder => {
                let axis = self.pose.rotation * Vec3::y();
                let cap_r = if self.kind == PrimitiveKind::Capsule {
                    Vec3::repeat(s[0])
                } else {
                    axis.map(|a| s[0] * (1.0 - a * a).max(0.0).sqrt())
                };
                axis.abs() * s[1] + cap_r
            }
        };
        Aabb::new(c - half, c + half)
    }

    pub fn surface_area(&self) -> f64 {
        let s = &self.size;
        match self.kind {
            PrimitiveKind::Sphere => 4.0 * PI * s[0] * s[0],
            PrimitiveKind::Box => 8.0 * (s[0] * s[1] + s[1] * s[2] + s[0] * s[2]),
            PrimitiveKind::Capsule => 4.0 * PI * s[0] * s[0] + 4.0 * PI * s[0] * s[1],
            PrimitiveKind::Cylinder => 2.0 * PI * s[0] * s[0] + 4.0 * PI * s[0] * s[1],
        }
    }

    /// Uniform (area-weighted) random point on the primitive surface, world frame.
    pub fn sample_surface<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let s = &self.size;
        let local = match self.kind {
            PrimitiveKind::Sphere => unit_vector(rng) * s[0],
            PrimitiveKind::Box => {
                let areas = [s[1] * s[2], s[0] * s[2], s[0] * s[1]];
                let total: f64 = areas.iter().sum();
                let mut pick = rng.random::<f64>() * total;
                let mut axis = 2;
                for (i, a) in areas.iter().enumerate() {
                    if pick < *a {
                        axis = i;
                        break;
                    }
                    pick -= a;
                }
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mut q = Vec3::zeros();
                for i in 0..3 {
                    q[i] = if i == axis {
                        sign * s[i]
                    } else {
                        (rng.random::<f64>() * 2.0 - 1.0) * s[i]
                    };
                }
                q
            }
            PrimitiveKind::Capsule => {
                let side = 4.0 * PI * s[0] * s[1];
                let caps = 4.0 * PI * s[0] * s[0];
                if rng.random::<f64>() * (side + caps) < side {
                    let phi = rng.random::<f64>() * 2.0 * PI;
                    let y = (rng.random::<f64>() * 2.0 - 1.0) * s[1];
                    Vec3::new(s[0] * phi.cos(), y, s[0] * phi.sin())
                } else {
                    let d = unit_vector(rng);
                    let offset = if d.y >= 0.0 { s[1] } else { -s[1] };
                    d * s[0] + Vec3::new(0.0, offset, 0.0)
                }
            }
            PrimitiveKind::Cylinder => {
                let side = 4.0 * PI * s[0] * s[1];
                let caps = 2.0 * PI * s[0] * s[0];
                if rng.random::<f64>() * (side + caps) < side {
                    let phi = rng.random::<f64>() * 2.0 * PI;
                    let y = (rng.random::<f64>() * 2.0 - 1.0) * s[1];
                    Vec3::new(s[0] * phi.cos(), y, s[0] * phi.sin())
                } else {
                    let phi = rng.random::<f64>() * 2.0 * PI;
                    let r = s[0] * rng.random::<f64>().sqrt();
                    let y = if rng.random::<bool>() { s[1] } else { -s[1] };
                    Vec3::new(r * phi.cos(), y, r * phi.sin())
                }
            }
        };
        self.pose.to_world(&local)
    }
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = rng.random::<f64>() * 2.0 - 1.0;
    let phi = rng.random::<f64>() * 2.0 * PI;
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}
