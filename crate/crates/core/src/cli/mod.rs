//! The `partfield` command line: argument parsing, config merging and exit codes.
//!
//! Every command reads an optional TOML run config (`--config`) and applies
//! its flags on top. Exit codes: 0 success, 2 bad input or I/O, 3 numerical
//! failure, 4 inconsistent inputs.

mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use toml::Value;

pub use commands::{
    eval, label_mesh, pipeline, reconstruct, segment, synth, Manifest, OutputFile, PipelineRun, Reconstruction, Seeds,
    Segmentation, CHECKPOINT_FILE, CONFIG_FILE, DATA_DIR, GRAPH_FILE, LABELED_MESH_FILE, LOSS_FILE, MANIFEST_FILE,
    MESH_FILE, REPORT_FILE, RIG_FILE, RUN_LOG_FILE, SEGMENT_FILE, SWEEP_FILE,
};
pub use config::{sha256_hex, RigConfig, RunConfig, SegmentConfig};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFiniteLoss { .. } => EXIT_NUMERICAL,
        Error::Consistency(_) => EXIT_CONSISTENCY,
        Error::InvalidArgument(_) | Error::Load { .. } | Error::Io { .. } | Error::Config(_) => EXIT_INPUT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "partfield", version, about = "Part-aware surface reconstruction from multiview masks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene and write a dataset with perturbed masks.
    Synth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scene: SceneFlags,
    },
    /// Train on a dataset; write checkpoint, unlabeled mesh and loss curve.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Label the mesh of a checkpoint from the dataset's masks.
    Segment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        seg: SegmentFlags,
    },
    /// Score a mesh against a scene.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mesh: PathBuf,
        /// Scene file or bundled scene name.
        #[arg(long)]
        scene: Option<String>,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        grid_res: Option<usize>,
    },
    /// synth, reconstruct, segment and eval in one run directory.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scene: SceneFlags,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        seg: SegmentFlags,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SceneFlags {
    /// Scene file or bundled scene name.
    #[arg(long)]
    pub scene: Option<String>,
    #[arg(long)]
    pub views: Option<usize>,
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub elevation: Option<f64>,
    /// Mask perturbation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub p_merge: Option<f64>,
    #[arg(long)]
    pub p_split: Option<f64>,
    #[arg(long)]
    pub jitter: Option<u32>,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub steps: Option<usize>,
    /// Weight of the contrastive term.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub train_seed: Option<u64>,
    /// Grid cells per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SegmentFlags {
    /// Use this single τ instead of the sweep.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Fixed part count; skips the mask graph.
    #[arg(long)]
    pub parts: Option<usize>,
}

type Overrides = Vec<(&'static str, Value)>;

fn push<T: Into<Value>>(o: &mut Overrides, key: &'static str, v: Option<T>) {
    if let Some(v) = v {
        o.push((key, v.into()));
    }
}

fn int<T: TryInto<i64>>(v: Option<T>) -> Option<Value> {
    v.and_then(|x| x.try_into().ok()).map(Value::Integer)
}

impl SceneFlags {
    fn apply(&self, o: &mut Overrides) {
        push(o, "scene", self.scene.clone());
        push(o, "rig.views", int(self.views));
        push(o, "rig.image_size", int(self.image_size));
        push(o, "rig.elevation_deg", self.elevation);
        push(o, "seed", int(self.seed));
        push(o, "noise.p_merge", self.p_merge);
        push(o, "noise.p_split", self.p_split);
        push(o, "noise.boundary_jitter_px", int(self.jitter));
    }
}

impl TrainFlags {
    fn apply(&self, o: &mut Overrides) {
        push(o, "train.steps", int(self.steps));
        push(o, "train.alpha", self.alpha);
        push(o, "train.seed", int(self.train_seed));
        push(o, "train.resolution", int(self.resolution));
    }
}

impl SegmentFlags {
    fn apply(&self, o: &mut Overrides) {
        if let Some(t) = self.tau {
            o.push(("segment.taus", Value::Array(vec![Value::Float(t)])));
        }
        push(o, "segment.parts", int(self.parts));
    }
}

fn load(common: &Common, mut o: Overrides) -> crate::Result<RunConfig> {
    if let Some(out) = &common.out {
        o.push(("output", Value::String(out.to_string_lossy().into_owned())));
    }
    RunConfig::load(common.config.as_deref(), &o)
}

fn run_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> crate::Result<()> {
    match &cli.command {
        Command::Synth { common, scene } => {
            let mut o = Overrides::new();
            scene.apply(&mut o);
            let cfg = load(common, o)?;
            synth(&cfg, cfg.require_output()?)?;
        }
        Command::Reconstruct { common, data, train } => {
            let mut o = Overrides::new();
            train.apply(&mut o);
            let cfg = load(common, o)?;
            let r = reconstruct(&cfg, data, cfg.require_output()?)?;
            println!("color_error {:.6}", r.color_error);
            println!("vertices {}", r.mesh.n_vertices());
        }
        Command::Segment {
            common,
            checkpoint,
            data,
            seg,
        } => {
            let mut o = Overrides::new();
            seg.apply(&mut o);
            let cfg = load(common, o)?;
            let s = segment(&cfg, checkpoint, data, cfg.require_output()?)?;
            for c in &s.outcome.candidates {
                println!(
                    "tau {:.2} parts {} raw {} db {:.4}{}",
                    c.tau,
                    c.n_parts,
                    c.n_parts_raw,
                    c.db_score,
                    if c.selected { " *" } else { "" }
                );
            }
            println!("parts {}", s.outcome.result.n_parts);
        }
        Command::Eval {
            common,
            mesh,
            scene,
            n_samples,
            grid_res,
        } => {
            let mut o = Overrides::new();
            push(&mut o, "scene", scene.clone());
            push(&mut o, "eval.n_samples", int(*n_samples));
            push(&mut o, "eval.grid_res", int(*grid_res));
            let cfg = load(common, o)?;
            let report = eval(&cfg, mesh, cfg.require_output()?, &run_name(mesh))?;
            print!("{}", report.to_json());
        }
        Command::Pipeline {
            common,
            scene,
            train,
            seg,
        } => {
            let mut o = Overrides::new();
            scene.apply(&mut o);
            train.apply(&mut o);
            seg.apply(&mut o);
            let cfg = load(common, o)?;
            let r = pipeline(&cfg)?;
            print!("{}", r.report.to_json());
        }
    }
    Ok(())
}
