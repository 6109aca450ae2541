//! Marching cubes on an analytic scene SDF, written as PLY and OBJ.

use partfield::evaluation::ground_truth_labels;
use partfield::geom::Aabb;
use partfield::meshing::{mesh_from_sdf, write_obj, write_ply};
use partfield::scene::Scene;

fn main() -> partfield::Result<()> {
    let scene = Scene::resolve("table")?;
    for res in [16, 32, 64] {
        let mut mesh = mesh_from_sdf(|q| scene.distance(q), &Aabb::cube(1.0), res);
        mesh.vertex_labels = ground_truth_labels(&mesh, &scene);
        println!("res {res:>2}: {} vertices, {} triangles", mesh.n_vertices(), mesh.triangles.len());
        if res == 64 {
            write_ply(&mesh, "/tmp/table.ply".as_ref())?;
            write_obj(&mesh, "/tmp/table.obj".as_ref())?;
        }
    }
    Ok(())
}
