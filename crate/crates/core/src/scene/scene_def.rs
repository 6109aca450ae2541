use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::primitive::{Pose, Primitive, PrimitiveKind};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// Union of labeled primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub primitives: Vec<Primitive>,
    pub bounds: Aabb,
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(rename = "primitive")]
    primitives: Vec<PrimitiveEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PrimitiveEntry {
    kind: PrimitiveKind,
    center: [f64; 3],
    size: Vec<f64>,
    label: u32,
    albedo: [f64; 3],
    #[serde(default)]
    rotation_deg: [f64; 3],
}

impl Scene {
    pub fn new(name: impl Into<String>, primitives: Vec<Primitive>) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::invalid("scene has no primitives"));
        }
        let mut bounds = Aabb::empty();
        for p in &primitives {
            bounds = bounds.union(&p.world_aabb());
        }
        Ok(Self {
            name: name.into(),
            primitives,
            bounds,
        })
    }

    /// Signed distance and owning part label. Ties go to the earlier primitive.
    pub fn sdf(&self, p: &Vec3) -> (f64, u32) {
        let (d, i) = self.sdf_with_index(p);
        (d, self.primitives[i].part_label)
    }

    /// Signed distance and the index of the argmin primitive.
    pub fn sdf_with_index(&self, p: &Vec3) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut idx = 0;
        for (i, prim) in self.primitives.iter().enumerate() {
            let d = prim.sdf(p);
            if d < best {
                best = d;
                idx = i;
            }
        }
        (best, idx)
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.sdf_with_index(p).0
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.diagonal()
    }

    /// Sorted distinct part labels.
    pub fn part_labels(&self) -> Vec<u32> {
        let mut labels: Vec<u32> = self.primitives.iter().map(|p| p.part_label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    pub fn n_parts(&self) -> usize {
        self.part_labels().len()
    }

    /// Area-weighted samples of the union's outer surface. Points buried inside
    /// another primitive are rejected.
    pub fn sample_surface<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec3> {
        use rand::RngExt;
        let areas: Vec<f64> = self.primitives.iter().map(Primitive::surface_area).collect();
        let total: f64 = areas.iter().sum();
        let tol = 1e-9 * self.diameter().max(1e-12);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while out.len() < n && attempts < 1000 * n.max(1) {
            attempts += 1;
            let mut pick = rng.random::<f64>() * total;
            let mut which = areas.len() - 1;
            for (i, a) in areas.iter().enumerate() {
                if pick < *a {
                    which = i;
                    break;
                }
                pick -= a;
            }
            let q = self.primitives[which].sample_surface(rng);
            if self.distance(&q) >= -tol {
                out.push(q);
            }
        }
        out
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SceneFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("scene file: {e}")))?;
        let mut prims = Vec::with_capacity(file.primitives.len());
        for entry in file.primitives {
            let pose = Pose::from_euler_deg(Vec3::from(entry.center), entry.rotation_deg);
            prims.push(Primitive::new(
                entry.kind,
                pose,
                entry.size,
                entry.label,
                entry.albedo,
            )?);
        }
        Scene::new(file.name.unwrap_or_else(|| "scene".to_string()), prims)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::load(path, e.to_string()))
    }

    /// Loads `spec` as a file path, or as a bundled scene name if no such file exists.
    pub fn resolve(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            return Self::load(path);
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(spec);
        bundled_scene(stem).ok_or_else(|| {
            Error::load(
                path,
                format!("no such file and no bundled scene named {stem:?}"),
            )
        })
    }
}

/// Names of the scenes shipped with the crate, in increasing difficulty.
pub const BUNDLED_SCENES: [&str; 5] = ["one_sphere", "two_spheres", "lshape", "dumbbell", "table"];

const ONE_SPHERE: &str = r#"
name = "one_sphere"

[[primitive]]
kind = "sphere"
center = [0.0, 0.0, 0.0]
size = [0.5]
label = 0
albedo = [0.8, 0.45, 0.3]
"#;

const TWO_SPHERES: &str = r#"
name = "two_spheres"

[[primitive]]
kind = "sphere"
center = [0.0, -0.24, 0.0]
size = [0.42]
label = 0
albedo = [0.85, 0.3, 0.25]

[[primitive]]
kind = "sphere"
center = [0.0, 0.4, 0.0]
size = [0.3]
label = 1
albedo = [0.25, 0.45, 0.85]
"#;

const DUMBBELL: &str = r#"
name = "dumbbell"

[[primitive]]
kind = "sphere"
center = [-0.48, 0.0, 0.0]
size = [0.28]
label = 0
albedo = [0.85, 0.3, 0.25]

[[primitive]]
kind = "sphere"
center = [0.48, 0.0, 0.0]
size = [0.28]
label = 1
albedo = [0.25, 0.45, 0.85]

[[primitive]]
kind = "cylinder"
center = [0.0, 0.0, 0.0]
size = [0.13, 0.36]
label = 2
albedo = [0.3, 0.75, 0.35]
rotation_deg = [0.0, 0.0, 90.0]
"#;

const TABLE: &str = r#"
name = "table"

[[primitive]]
kind = "box"
center = [0.0, 0.22, 0.0]
size = [0.6, 0.07, 0.42]
label = 0
albedo = [0.75, 0.55, 0.3]

[[primitive]]
kind = "cylinder"
center = [0.48, -0.15, 0.3]
size = [0.07, 0.32]
label = 1
albedo = [0.3, 0.3, 0.8]

[[primitive]]
kind = "cylinder"
center = [-0.48, -0.15, 0.3]
size = [0.07, 0.32]
label = 2
albedo = [0.8, 0.3, 0.3]

[[primitive]]
kind = "cylinder"
center = [0.48, -0.15, -0.3]
size = [0.07, 0.32]
label = 3
albedo = [0.3, 0.75, 0.3]

[[primitive]]
kind = "cylinder"
center = [-0.48, -0.15, -0.3]
size = [0.07, 0.32]
label = 4
albedo = [0.75, 0.75, 0.25]
"#;

const LSHAPE: &str = r#"
name = "lshape"

[[primitive]]
kind = "box"
center = [0.0, -0.25, 0.0]
size = [0.5, 0.15, 0.22]
label = 0
albedo = [0.8, 0.4, 0.25]

[[primitive]]
kind = "box"
center = [-0.35, 0.22, 0.0]
size = [0.15, 0.35, 0.22]
label = 1
albedo = [0.25, 0.5, 0.8]
"#;

/// Scene description text for a bundled scene.
pub fn bundled_scene_text(name: &str) -> Option<&'static str> {
    match name {
        "one_sphere" => Some(ONE_SPHERE),
        "two_spheres" => Some(TWO_SPHERES),
        "dumbbell" => Some(DUMBBELL),
        "table" => Some(TABLE),
        "lshape" => Some(LSHAPE),
        _ => None,
    }
}

pub fn bundled_scene(name: &str) -> Option<Scene> {
    bundled_scene_text(name).map(|t| Scene::from_toml_str(t).expect("bundled scene parses"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_sphere() -> Scene {
        Scene::new(
            "s",
            vec![Primitive::sphere(Vec3::zeros(), 1.0, 3, [0.5; 3]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn unit_sphere_center_and_outside() {
        let s = unit_sphere();
        assert_eq!(s.sdf(&Vec3::zeros()), (-1.0, 3));
        assert_eq!(s.sdf(&Vec3::new(2.0, 0.0, 0.0)), (1.0, 3));
    }

    #[test]
    fn overlapping_spheres_pick_argmin() {
        // sphere 1 at -0.75 gives 1.5 - 1 = 0.5, sphere 2 at +0.75 gives -1.
        let s = Scene::new(
            "pair",
            vec![
                Primitive::sphere(Vec3::new(-0.75, 0.0, 0.0), 1.0, 10, [0.5; 3]).unwrap(),
                Primitive::sphere(Vec3::new(0.75, 0.0, 0.0), 1.0, 20, [0.5; 3]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(s.sdf(&Vec3::new(0.75, 0.0, 0.0)), (-1.0, 20));
        // exact tie at the origin goes to the first primitive
        assert_eq!(s.sdf(&Vec3::zeros()).1, 10);
    }

    #[test]
    fn label_is_argmin_member_on_random_points() {
        let scene = bundled_scene("table").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let p = Vec3::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
            let per: Vec<f64> = scene.primitives.iter().map(|q| q.sdf(&p)).collect();
            let min = per.iter().cloned().fold(f64::INFINITY, f64::min);
            let first = per.iter().position(|d| *d == min).unwrap();
            let (d, label) = scene.sdf(&p);
            assert_eq!(d, min);
            assert_eq!(label, scene.primitives[first].part_label);
        }
    }

    #[test]
    fn bundled_scenes_parse_and_fit_unit_cube() {
        for name in BUNDLED_SCENES {
            let s = bundled_scene(name).unwrap();
            assert!(Aabb::cube(0.95).contains(&s.bounds.min), "{name}");
            assert!(Aabb::cube(0.95).contains(&s.bounds.max), "{name}");
        }
        assert_eq!(bundled_scene("two_spheres").unwrap().n_parts(), 2);
        assert_eq!(bundled_scene("dumbbell").unwrap().n_parts(), 3);
        assert_eq!(bundled_scene("table").unwrap().n_parts(), 5);
    }

    #[test]
    fn scene_file_rejects_bad_size() {
        let text = r#"
[[primitive]]
kind = "sphere"
center = [0, 0, 0]
size = [-1.0]
label = 0
albedo = [0.5, 0.5, 0.5]
"#;
        assert!(Scene::from_toml_str(text).is_err());
    }

    #[test]
    fn union_surface_samples_are_on_outer_surface() {
        let s = bundled_scene("two_spheres").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = s.sample_surface(2000, &mut rng);
        assert_eq!(pts.len(), 2000);
        for p in pts {
            assert!(s.distance(&p).abs() < 1e-9);
        }
    }
}
