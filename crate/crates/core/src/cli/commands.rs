use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{sha256_hex, RunConfig, SegmentConfig};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalReport};
use crate::field::{load_checkpoint, render_depth_map, save_checkpoint, FieldModel};
use crate::meshing::{attach_features, extract_mesh, read_ply, write_ply, LabeledMesh};
use crate::scene::{load_dataset, perturb_masks, render_rig, write_dataset, Dataset, Scene};
use crate::segmentation::{segment as run_segment, SweepOutcome};
use crate::training::{color_error, train_from, TrainOutcome};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const MESH_FILE: &str = "mesh.ply";
pub const LOSS_FILE: &str = "losses.csv";
pub const RIG_FILE: &str = "cameras.txt";
pub const LABELED_MESH_FILE: &str = "labeled.ply";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const GRAPH_FILE: &str = "graph.txt";
pub const SEGMENT_FILE: &str = "segment.json";
pub const REPORT_FILE: &str = "report.json";
pub const RUN_LOG_FILE: &str = "runs.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const DATA_DIR: &str = "data";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Renders the scene through the configured rig, perturbs the masks and
/// writes the dataset (colors, masks, cameras) into `out`.
pub fn synth(cfg: &RunConfig, out: &Path) -> Result<Dataset> {
    let scene = Scene::resolve(cfg.require_scene()?)?;
    let rig = cfg.rig.build()?;
    let renders = render_rig(&scene, &rig);
    let masks = perturb_masks(&renders, &cfg.noise, cfg.seed)?;
    let mut data = Dataset::from_renders(rig, &renders, masks);
    data.depths = None;
    write_dataset(out, &data)?;
    log::info!("wrote {} views of {} to {}", data.n_views(), scene.name, out.display());
    Ok(data)
}

pub struct Reconstruction {
    pub outcome: TrainOutcome,
    pub mesh: LabeledMesh,
    pub color_error: f64,
}

/// Trains on the dataset in `data_dir` and writes the checkpoint, the
/// unlabeled mesh, the loss curve and a copy of the cameras into `out`.
pub fn reconstruct(cfg: &RunConfig, data_dir: &Path, out: &Path) -> Result<Reconstruction> {
    let data = load_dataset(data_dir)?;
    create_dir(out)?;
    let tc = &cfg.train;
    let model = FieldModel::new(&tc.field_init())?;
    let every = (tc.steps / 20).max(1);
    let outcome = train_from(model, &data, tc, |r| {
        if (r.step + 1) % every == 0 || r.step + 1 == tc.steps {
            log::info!("step {}/{} loss {:.5} color {:.5}", r.step + 1, tc.steps, r.total, r.color);
        }
    })?;
    let color = color_error(&outcome.model, &data, tc.n_samples, tc.background);
    log::info!("mean L1 color error {color:.5}");
    let mesh = extract_mesh(&outcome.model, 0.0);
    save_checkpoint(&outcome.model, &out.join(CHECKPOINT_FILE))?;
    write_ply(&mesh, &out.join(MESH_FILE))?;
    outcome.write_loss_curve(&out.join(LOSS_FILE))?;
    let cams = data_dir.join(RIG_FILE);
    fs::copy(&cams, out.join(RIG_FILE)).map_err(|e| Error::io(&cams, e))?;
    Ok(Reconstruction {
        outcome,
        mesh,
        color_error: color,
    })
}

#[derive(Debug, Serialize)]
struct SegmentSummary {
    tau: Option<f64>,
    n_parts: usize,
    db_score: Option<f64>,
    eps_occ: f64,
    seed_points: Vec<[f64; 3]>,
}

pub struct Segmentation {
    pub mesh: LabeledMesh,
    pub outcome: SweepOutcome,
}

/// Extracts the model's mesh, attaches features, renders depth maps for the
/// dataset's cameras and runs the segmentation. Returns the labeled mesh, the
/// sweep outcome and the occlusion tolerance used.
pub fn label_mesh(
    model: &FieldModel,
    data: &Dataset,
    cfg: &SegmentConfig,
) -> Result<(LabeledMesh, SweepOutcome, f64)> {
    let mut mesh = extract_mesh(model, 0.0);
    if mesh.is_empty() {
        return Err(Error::Consistency("model has an empty surface".into()));
    }
    attach_features(model, &mut mesh);
    let depths: Vec<_> = data
        .rig
        .cameras
        .iter()
        .map(|c| render_depth_map(model, c, cfg.depth_samples))
        .collect();
    let sweep = cfg.sweep(mesh.bounds().diagonal());
    let outcome = run_segment(&mesh, &data.masks, &depths, &data.rig, &sweep)?;
    mesh.vertex_labels = outcome.result.labels.iter().map(|&l| l as i32).collect();
    Ok((mesh, outcome, sweep.eps_occ))
}

/// Labels the mesh of a trained checkpoint using the dataset's masks, and
/// writes the labeled mesh, the τ sweep table, the mask graphs and a summary
/// into `out`. The dataset must use the cameras the model was trained with
/// when a camera copy sits beside the checkpoint.
pub fn segment(cfg: &RunConfig, checkpoint: &Path, data_dir: &Path, out: &Path) -> Result<Segmentation> {
    let model = load_checkpoint(checkpoint)?;
    let data = load_dataset(data_dir)?;
    if let Some(dir) = checkpoint.parent() {
        let trained = dir.join(RIG_FILE);
        if trained.exists() {
            let a = fs::read(&trained).map_err(|e| Error::io(&trained, e))?;
            let given = data_dir.join(RIG_FILE);
            let b = fs::read(&given).map_err(|e| Error::io(&given, e))?;
            if a != b {
                return Err(Error::Consistency(format!(
                    "cameras in {} differ from those the checkpoint was trained with ({})",
                    given.display(),
                    trained.display()
                )));
            }
        }
    }
    create_dir(out)?;
    let (mesh, outcome, eps_occ) = label_mesh(&model, &data, &cfg.segment)?;
    log::info!(
        "{} parts (tau {:?}, DB {:.4})",
        outcome.result.n_parts,
        outcome.result.tau,
        outcome.result.db_score
    );

    write_ply(&mesh, &out.join(LABELED_MESH_FILE))?;
    let sweep_path = out.join(SWEEP_FILE);
    let mut w = csv::Writer::from_path(&sweep_path).map_err(|e| Error::load(&sweep_path, e.to_string()))?;
    w.write_record(["tau", "n_parts", "n_parts_raw", "db_score", "selected"])
        .and_then(|_| {
            outcome.candidates.iter().try_for_each(|c| {
                w.write_record([
                    c.tau.to_string(),
                    c.n_parts.to_string(),
                    c.n_parts_raw.to_string(),
                    c.db_score.to_string(),
                    c.selected.to_string(),
                ])
            })
        })
        .map_err(|e| Error::load(&sweep_path, e.to_string()))?;
    w.flush().map_err(|e| Error::io(&sweep_path, e))?;
    let mut dump = String::new();
    for (tau, g) in &outcome.graphs {
        dump.push_str(&format!("# tau {tau}\n"));
        dump.push_str(&g.dump());
    }
    write_text(&out.join(GRAPH_FILE), &dump)?;
    let summary = SegmentSummary {
        tau: outcome.result.tau,
        n_parts: outcome.result.n_parts,
        db_score: outcome.result.db_score.is_finite().then_some(outcome.result.db_score),
        eps_occ,
        seed_points: outcome.result.seed_points.iter().map(|p| [p.x, p.y, p.z]).collect(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_text(&out.join(SEGMENT_FILE), &json)?;
    Ok(Segmentation { mesh, outcome })
}

/// Scores the mesh at `mesh_path` against the configured scene, writes the
/// report into `out` and appends it to the run log there.
pub fn eval(cfg: &RunConfig, mesh_path: &Path, out: &Path, run: &str) -> Result<EvalReport> {
    let scene = Scene::resolve(cfg.require_scene()?)?;
    let mesh = read_ply(mesh_path)?;
    create_dir(out)?;
    let report = evaluate(&mesh, &scene, &cfg.eval);
    report.write(&out.join(REPORT_FILE))?;
    report.append_to_log(&out.join(RUN_LOG_FILE), run)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub masks: u64,
    pub train: u64,
    pub eval: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub scene: String,
    pub config_hash: String,
    pub seeds: Seeds,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            list_files(root, &p, out)?;
        } else if p.file_name().is_some_and(|n| n != MANIFEST_FILE && n != RUN_LOG_FILE) {
            out.push(p.strip_prefix(root).expect("inside root").to_path_buf());
        }
    }
    Ok(())
}

pub struct PipelineRun {
    pub manifest: Manifest,
    pub report: EvalReport,
    pub reconstruction: Reconstruction,
    pub segmentation: Segmentation,
}

/// synth, reconstruct, segment and eval into one run directory, followed by a
/// manifest of seeds, the config hash and the SHA-256 of every output.
pub fn pipeline(cfg: &RunConfig) -> Result<PipelineRun> {
    let scene = cfg.require_scene()?.to_string();
    let out = cfg.require_output()?.to_path_buf();
    create_dir(&out)?;
    write_text(&out.join(CONFIG_FILE), &cfg.to_toml_string())?;
    let data_dir = out.join(DATA_DIR);
    synth(cfg, &data_dir)?;
    let reconstruction = reconstruct(cfg, &data_dir, &out)?;
    let segmentation = segment(cfg, &out.join(CHECKPOINT_FILE), &data_dir, &out)?;
    let report = eval(cfg, &out.join(LABELED_MESH_FILE), &out, &scene)?;

    let mut files = Vec::new();
    list_files(&out, &out, &mut files)?;
    let outputs = files
        .iter()
        .map(|rel| {
            let p = out.join(rel);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            Ok(OutputFile {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        scene,
        config_hash: cfg.hash(),
        seeds: Seeds {
            masks: cfg.seed,
            train: cfg.train.seed,
            eval: cfg.eval.seed,
        },
        outputs,
    };
    write_text(&out.join(MANIFEST_FILE), &manifest.to_json())?;
    Ok(PipelineRun {
        manifest,
        report,
        reconstruction,
        segmentation,
    })
}
