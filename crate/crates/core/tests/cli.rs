use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use partfield::evaluation::{ground_truth_labels, EvalReport};
use partfield::geom::Aabb;
use partfield::meshing::{mesh_from_sdf, write_ply, LabeledMesh};
use partfield::scene::{bundled_scene, load_dataset};

fn partfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_partfield"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = partfield(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: [&str; 6] = ["--views", "4", "--image-size", "24", "--resolution", "16"];

fn small_synth(dir: &Path, views: &str) -> PathBuf {
    let data = dir.join(format!("data{views}"));
    ok(&["synth", "--scene", "two_spheres", "--views", views, "--image-size", "24", "--out", p(&data)]);
    data
}

fn small_reconstruct(dir: &Path, data: &Path, steps: &str) -> PathBuf {
    let out = dir.join("model");
    ok(&["reconstruct", "--data", p(data), "--out", p(&out), "--steps", steps, "--resolution", "16"]);
    out
}

#[test]
fn synth_writes_the_dataset_layout_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["synth", "--scene", "two_spheres.scn", "--views", "16", "--seed", "7", "--out", p(out)]);
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 33);
    assert_eq!(names.iter().filter(|n| n.ends_with("_color.ppm")).count(), 16);
    assert_eq!(names.iter().filter(|n| n.ends_with("_mask.pgm")).count(), 16);
    assert!(names.contains(&"cameras.txt".to_string()));
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n}");
    }
}

#[test]
fn six_views_are_sixty_degrees_apart() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_synth(dir.path(), "6");
    let ds = load_dataset(&data).unwrap();
    assert_eq!(ds.n_views(), 6);
    for w in ds.rig.cameras.windows(2) {
        let step = (w[1].azimuth_deg() - w[0].azimuth_deg()).rem_euclid(360.0);
        assert!((step - 60.0).abs() < 1e-6, "step {step}");
    }
}

#[test]
fn one_step_reconstruction_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_synth(dir.path(), "4");
    let out = small_reconstruct(dir.path(), &data, "1");
    for f in ["model.ckpt", "mesh.ply", "losses.csv", "cameras.txt"] {
        assert!(out.join(f).metadata().unwrap().len() > 0, "{f}");
    }
    let losses = fs::read_to_string(out.join("losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 2);
}

#[test]
fn diverging_training_exits_with_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_synth(dir.path(), "4");
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[train]\nsdf_learning_rate = 1e305\nlearning_rate = 1e305\n").unwrap();
    let out = partfield(&[
        "reconstruct",
        "--config",
        p(&cfg),
        "--data",
        p(&data),
        "--out",
        p(&dir.path().join("m")),
        "--steps",
        "20",
        "--resolution",
        "16",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("non-finite loss at step"), "{err}");
}

#[test]
fn segment_honours_fixed_part_count_and_rejects_foreign_cameras() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_synth(dir.path(), "4");
    let model = small_reconstruct(dir.path(), &data, "3");
    let ckpt = model.join("model.ckpt");
    let seg = dir.path().join("seg");
    ok(&["segment", "--checkpoint", p(&ckpt), "--data", p(&data), "--out", p(&seg), "--parts", "1"]);
    let mesh = partfield::meshing::read_ply(&seg.join("labeled.ply")).unwrap();
    assert_eq!(mesh.labels(), vec![0]);
    for f in ["sweep.csv", "graph.txt", "segment.json"] {
        assert!(seg.join(f).exists(), "{f}");
    }

    let single = dir.path().join("seg_tau");
    let out = ok(&["segment", "--checkpoint", p(&ckpt), "--data", p(&data), "--out", p(&single), "--tau", "0.7"]);
    let sweep = fs::read_to_string(single.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next().unwrap(), "tau,n_parts,n_parts_raw,db_score,selected");
    assert_eq!(sweep.lines().count(), 2);
    assert!(sweep.lines().nth(1).unwrap().starts_with("0.7,"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("parts "));

    let other = small_synth(dir.path(), "5");
    let out = partfield(&["segment", "--checkpoint", p(&ckpt), "--data", p(&other), "--out", p(&seg)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

fn gt_mesh(scene: &str, res: usize) -> LabeledMesh {
    let s = bundled_scene(scene).unwrap();
    let mut mesh = mesh_from_sdf(|q| s.distance(q), &Aabb::cube(1.0), res);
    mesh.vertex_labels = ground_truth_labels(&mesh, &s);
    mesh
}

#[test]
fn eval_scores_ground_truth_and_round_trips_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("gt.ply");
    write_ply(&gt_mesh("two_spheres", 64), &mesh_path).unwrap();
    let out_dir = dir.path().join("eval");
    let out = ok(&["eval", "--mesh", p(&mesh_path), "--scene", "two_spheres", "--out", p(&out_dir)]);
    let printed = EvalReport::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let written = EvalReport::read(&out_dir.join("report.json")).unwrap();
    assert_eq!(printed, written);
    let cell = 2.0 / 64.0;
    assert!(written.volume_iou > 0.95, "{written:?}");
    assert!(written.chamfer < 2.0 * cell, "{written:?}");
    assert_eq!(written.label_accuracy, 1.0);
    assert_eq!((written.part_count_pred, written.part_count_gt), (2, 2));

    ok(&["eval", "--mesh", p(&mesh_path), "--scene", "two_spheres", "--out", p(&out_dir)]);
    let log = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert!(log.starts_with("run,chamfer,volume_iou,label_accuracy,part_count_pred,part_count_gt\n"));
}

#[test]
fn eval_of_an_empty_mesh_succeeds_with_the_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("empty.ply");
    write_ply(&LabeledMesh::default(), &mesh_path).unwrap();
    let out_dir = dir.path().join("eval");
    let out = ok(&["eval", "--mesh", p(&mesh_path), "--scene", "one_sphere", "--out", p(&out_dir)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    let report = EvalReport::read(&out_dir.join("report.json")).unwrap();
    assert!(report.chamfer.is_infinite());
    assert_eq!(report.volume_iou, 0.0);
    assert!(fs::read_to_string(out_dir.join("report.json")).unwrap().contains("\"inf\""));
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = partfield(&["eval", "--mesh", "/nonexistent/mesh.ply", "--scene", "one_sphere", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let garbage = dir.path().join("bad.ply");
    fs::write(&garbage, "not a ply").unwrap();
    let out = partfield(&["eval", "--mesh", p(&garbage), "--scene", "one_sphere", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let out = partfield(&["synth", "--scene", "no_such_scene", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    let out = partfield(&["reconstruct", "--data", p(&dir.path().join("missing")), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_config_must_name_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("output = {:?}\n[train]\nsteps = 1\n", p(&dir.path().join("run")))).unwrap();
    let out = partfield(&["pipeline", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`scene`"), "{err}");

    fs::write(&cfg, "scene = \"one_sphere\"\n[train]\nsteps = 1\nbogus = 3\n").unwrap();
    let out = partfield(&["pipeline", "--config", p(&cfg), "--out", p(&dir.path().join("run"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn pipeline_writes_a_manifest_of_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let mut args = vec!["pipeline", "--scene", "two_spheres", "--steps", "3", "--out", p(&run)];
    args.extend(SMALL);
    ok(&args);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    let paths: Vec<&str> = outputs.iter().map(|o| o["path"].as_str().unwrap()).collect();
    for f in ["model.ckpt", "mesh.ply", "labeled.ply", "report.json", "sweep.csv", "config.toml", "data/cameras.txt"] {
        assert!(paths.contains(&f), "{f} missing from {paths:?}");
    }
    let cfg_hash = manifest["config_hash"].as_str().unwrap();
    let cfg_entry = outputs.iter().find(|o| o["path"] == "config.toml").unwrap();
    assert_eq!(cfg_entry["sha256"].as_str().unwrap(), cfg_hash);
    assert_eq!(manifest["seeds"]["train"], 0);
}

#[test]
fn thread_cap_must_be_positive() {
    let out = Command::new(env!("CARGO_BIN_EXE_partfield"))
        .args(["synth", "--scene", "one_sphere", "--out", "/nonexistent"])
        .env("PARTFIELD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
