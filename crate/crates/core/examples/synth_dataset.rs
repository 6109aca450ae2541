//! Renders a bundled scene through a camera ring, perturbs the masks and
//! writes the dataset.
//!
//! ```text
//! cargo run --release --example synth_dataset -- dumbbell /tmp/dumbbell
//! ```

use std::path::PathBuf;

use partfield::scene::{make_camera_rig, perturb_masks, render_rig, write_dataset, Dataset, NoiseConfig, Scene};

fn main() -> partfield::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "two_spheres".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| format!("/tmp/{name}")));

    let scene = Scene::resolve(&name)?;
    let rig = make_camera_rig(8, 30.0, 2.7, 64, 40.0)?;
    let renders = render_rig(&scene, &rig);
    let noise = NoiseConfig {
        p_merge: 0.2,
        p_split: 0.1,
        boundary_jitter_px: 2,
    };
    let masks = perturb_masks(&renders, &noise, 0)?;
    for (v, r) in renders.iter().enumerate() {
        println!(
            "view {v}: {} foreground px, {} masks",
            r.foreground_count(),
            masks.ids(v).len()
        );
    }
    write_dataset(&out, &Dataset::from_renders(rig, &renders, masks))?;
    println!("wrote {}", out.display());
    Ok(())
}
