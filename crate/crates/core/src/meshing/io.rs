use std::fmt::Write as _;
use std::path::Path;

use super::mesh::{LabeledMesh, UNASSIGNED};
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// ASCII PLY with `x y z label f0..` per vertex. Features are written only
/// when every vertex has them.
pub fn encode_ply(mesh: &LabeledMesh) -> String {
    let nc = if mesh.has_features() { mesh.vertex_features[0].len() } else { 0 };
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertices.len());
    s.push_str("property float x\nproperty float y\nproperty float z\nproperty int label\n");
    for c in 0..nc {
        let _ = writeln!(s, "property float f{c}");
    }
    let _ = writeln!(s, "element face {}", mesh.triangles.len());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for (i, v) in mesh.vertices.iter().enumerate() {
        let label = mesh.vertex_labels.get(i).copied().unwrap_or(UNASSIGNED);
        let _ = write!(s, "{} {} {} {}", v.x, v.y, v.z, label);
        if nc > 0 {
            for f in &mesh.vertex_features[i] {
                let _ = write!(s, " {f}");
            }
        }
        s.push('\n');
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Reads ASCII PLY. Vertex properties other than x, y, z, label and f<k> are
/// ignored; faces with more than three corners are fanned into triangles.
pub fn decode_ply(text: &str) -> std::result::Result<LabeledMesh, String> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err("missing ply magic".into());
    }
    let mut n_vertices = None;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut current = "";
    loop {
        let line = lines.next().ok_or("unterminated header")?.trim();
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["end_header"] => break,
            ["format", fmt, ..] if *fmt != "ascii" => return Err(format!("unsupported format {fmt}")),
            ["element", "vertex", n] => {
                n_vertices = Some(n.parse::<usize>().map_err(|e| e.to_string())?);
                current = "vertex";
            }
            ["element", "face", n] => {
                n_faces = n.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
                current = "face";
            }
            ["element", ..] => current = "other",
            ["property", "list", ..] => {}
            ["property", _, name] if current == "vertex" => vertex_props.push(name.to_string()),
            _ => {}
        }
    }
    let n_vertices = n_vertices.ok_or("no vertex element")?;
    let col = |name: &str| vertex_props.iter().position(|p| p == name);
    let (xi, yi, zi) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err("vertex element lacks x, y or z".into()),
    };
    let li = col("label");
    let mut fi = Vec::new();
    while let Some(i) = col(&format!("f{}", fi.len())) {
        fi.push(i);
    }
    let mut mesh = LabeledMesh::default();
    for k in 0..n_vertices {
        let line = lines.next().ok_or_else(|| format!("missing vertex {k}"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| format!("vertex {k}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() < vertex_props.len() {
            return Err(format!("vertex {k} has {} values, expected {}", vals.len(), vertex_props.len()));
        }
        mesh.vertices.push(Vec3::new(vals[xi], vals[yi], vals[zi]));
        mesh.vertex_labels.push(li.map_or(UNASSIGNED, |i| vals[i] as i32));
        if !fi.is_empty() {
            mesh.vertex_features.push(fi.iter().map(|&i| vals[i]).collect());
        }
    }
    for k in 0..n_faces {
        let line = lines.next().ok_or_else(|| format!("missing face {k}"))?;
        let idx: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| format!("face {k}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let count = *idx.first().ok_or_else(|| format!("empty face {k}"))? as usize;
        if count < 3 || idx.len() != count + 1 {
            return Err(format!("face {k} is malformed"));
        }
        if let Some(&bad) = idx[1..].iter().find(|&&i| i as usize >= n_vertices) {
            return Err(format!("face {k} references vertex {bad}"));
        }
        for j in 2..count {
            mesh.triangles.push([idx[1], idx[j], idx[j + 1]]);
        }
    }
    Ok(mesh)
}

pub fn write_ply(mesh: &LabeledMesh, path: &Path) -> Result<()> {
    std::fs::write(path, encode_ply(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_ply(path: &Path) -> Result<LabeledMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_ply(&text).map_err(|reason| Error::load(path, reason))
}

fn part_color(label: i32) -> [f64; 3] {
    if label < 0 {
        return [0.6, 0.6, 0.6];
    }
    // Golden-angle hue walk.
    let h = (label as f64 * 0.618_033_988_75).fract() * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [0.2 + 0.7 * r, 0.2 + 0.7 * g, 0.2 + 0.7 * b]
}

/// OBJ text with one group and material per triangle label, plus the
/// matching MTL text.
pub fn encode_obj(mesh: &LabeledMesh, mtl_name: &str) -> (String, String) {
    let mut obj = String::new();
    let _ = writeln!(obj, "mtllib {mtl_name}");
    for v in &mesh.vertices {
        let _ = writeln!(obj, "v {} {} {}", v.x, v.y, v.z);
    }
    let tri_labels = mesh.triangle_labels();
    let mut labels = tri_labels.clone();
    labels.sort_unstable();
    labels.dedup();
    let mut mtl = String::new();
    for &l in &labels {
        let name = if l < 0 { "unassigned".to_string() } else { format!("part{l}") };
        let c = part_color(l);
        let _ = writeln!(mtl, "newmtl {name}\nKd {:.4} {:.4} {:.4}\n", c[0], c[1], c[2]);
        let _ = writeln!(obj, "g {name}\nusemtl {name}");
        for (t, _) in tri_labels.iter().enumerate().filter(|(_, x)| **x == l) {
            let [a, b, c] = mesh.triangles[t];
            let _ = writeln!(obj, "f {} {} {}", a + 1, b + 1, c + 1);
        }
    }
    (obj, mtl)
}

/// Writes `path` and a sibling `.mtl` file.
pub fn write_obj(mesh: &LabeledMesh, path: &Path) -> Result<()> {
    let mtl_path = path.with_extension("mtl");
    let mtl_name = mtl_path.file_name().and_then(|n| n.to_str()).unwrap_or("parts.mtl");
    let (obj, mtl) = encode_obj(mesh, mtl_name);
    std::fs::write(path, obj).map_err(|e| Error::io(path, e))?;
    std::fs::write(&mtl_path, mtl).map_err(|e| Error::io(&mtl_path, e))
}
