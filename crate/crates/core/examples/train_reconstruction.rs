//! Trains the SDF and feature grids on a small two_spheres dataset, then
//! extracts the surface and writes it with the checkpoint.

use partfield::field::save_checkpoint;
use partfield::meshing::{extract_mesh, write_ply};
use partfield::scene::{make_camera_rig, perturb_masks, render_rig, Dataset, NoiseConfig, Scene};
use partfield::training::{color_error, train, TrainConfig};

fn main() -> partfield::Result<()> {
    let scene = Scene::resolve("two_spheres")?;
    let rig = make_camera_rig(12, 30.0, 2.7, 48, 40.0)?;
    let renders = render_rig(&scene, &rig);
    let masks = perturb_masks(&renders, &NoiseConfig::NONE, 0)?;
    let data = Dataset::from_renders(rig, &renders, masks);

    let cfg = TrainConfig {
        steps: 400,
        resolution: 32,
        eikonal_points: 16_384,
        ..TrainConfig::default()
    };
    let out = train(&data, &cfg)?;
    for r in out.losses.iter().step_by(50) {
        println!(
            "step {:>4}: total {:.4} color {:.4} eikonal {:.4} contrastive {:.4}",
            r.step, r.total, r.color, r.eikonal, r.contrastive
        );
    }
    println!("mean L1 color error {:.4}", color_error(&out.model, &data, cfg.n_samples, cfg.background));

    let mesh = extract_mesh(&out.model, 0.0);
    println!("{} vertices", mesh.n_vertices());
    save_checkpoint(&out.model, "/tmp/two_spheres.ckpt".as_ref())?;
    write_ply(&mesh, "/tmp/two_spheres.ply".as_ref())?;
    out.write_loss_curve("/tmp/two_spheres_losses.csv".as_ref())
}
