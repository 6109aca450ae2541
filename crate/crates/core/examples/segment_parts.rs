//! Trains briefly on the dumbbell, then labels the mesh with each τ of the
//! sweep and reports the Davies-Bouldin choice and its accuracy.

use partfield::cli::{label_mesh, SegmentConfig};
use partfield::evaluation::{ground_truth_labels, label_accuracy};
use partfield::scene::{make_camera_rig, perturb_masks, render_rig, Dataset, NoiseConfig, Scene};
use partfield::training::{train, TrainConfig};

fn main() -> partfield::Result<()> {
    let scene = Scene::resolve("dumbbell")?;
    let rig = make_camera_rig(16, 30.0, 2.7, 48, 40.0)?;
    let renders = render_rig(&scene, &rig);
    let masks = perturb_masks(&renders, &NoiseConfig::NONE, 0)?;
    let data = Dataset::from_renders(rig, &renders, masks);
    let cfg = TrainConfig {
        steps: 800,
        resolution: 40,
        eikonal_points: 32_000,
        ..TrainConfig::default()
    };
    let model = train(&data, &cfg)?.model;

    let (mesh, outcome, eps) = label_mesh(&model, &data, &SegmentConfig::default())?;
    println!("eps_occ {eps:.4}");
    for c in &outcome.candidates {
        let mark = if c.selected { "  <- chosen" } else { "" };
        println!("tau {:.1}: {} parts, DB {:.4}{mark}", c.tau, c.n_parts, c.db_score);
    }
    let acc = label_accuracy(&mesh.vertex_labels, &ground_truth_labels(&mesh, &scene));
    println!("{} parts, accuracy {acc:.4}", outcome.result.n_parts);
    Ok(())
}
