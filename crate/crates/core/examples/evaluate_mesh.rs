//! Scores meshes against the one_sphere scene: marching-cubes meshes at
//! several resolutions, and a sphere that is slightly too small.

use partfield::evaluation::{evaluate, EvalConfig};
use partfield::geom::Aabb;
use partfield::meshing::mesh_from_sdf;
use partfield::scene::Scene;

fn main() -> partfield::Result<()> {
    let scene = Scene::resolve("one_sphere")?;
    let cfg = EvalConfig::default();
    for res in [8, 16, 32, 64] {
        let mesh = mesh_from_sdf(|q| scene.distance(q), &Aabb::cube(1.0), res);
        let r = evaluate(&mesh, &scene, &cfg);
        println!("res {res:>2}: chamfer {:.4} IoU {:.4}", r.chamfer, r.volume_iou);
    }
    let shrunk = mesh_from_sdf(|q| scene.distance(q) + 0.05, &Aabb::cube(1.0), 64);
    let r = evaluate(&shrunk, &scene, &cfg);
    println!("shrunk by 0.05: chamfer {:.4} IoU {:.4}", r.chamfer, r.volume_iou);
    Ok(())
}
