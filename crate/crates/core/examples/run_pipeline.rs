//! The whole pipeline through the library API with a reduced config.
//! Writes a run directory and prints its manifest.

use partfield::cli::{pipeline, RunConfig};
use toml::Value;

fn main() -> partfield::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "/tmp/partfield_run".into());
    let mut cfg = RunConfig::load(
        None,
        &[
            ("scene", Value::String("two_spheres".into())),
            ("output", Value::String(out)),
            ("rig.views", Value::Integer(8)),
            ("rig.image_size", Value::Integer(32)),
            ("train.steps", Value::Integer(300)),
            ("train.resolution", Value::Integer(32)),
        ],
    )?;
    cfg.train.eikonal_points = 16_384;
    let run = pipeline(&cfg)?;
    print!("{}", run.report.to_json());
    print!("{}", run.manifest.to_json());
    Ok(())
}
