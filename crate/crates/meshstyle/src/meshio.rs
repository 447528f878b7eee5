//! Wavefront OBJ and ASCII PLY reading and writing.
//!
//! OBJ files carry optional per-vertex colors with the common `v x y z r g b`
//! extension. Numbers are written in shortest round-trip form, so a write
//! followed by a read reproduces every coordinate exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use meshstyle_core::Mesh;

use crate::error::{Error, Result};

/// Loads an `.obj` or `.ply` mesh. Polygons are fan-triangulated.
pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match extension(path).as_str() {
        "ply" => parse_ply(&text, path),
        _ => parse_obj(&text, path),
    }
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), line, message: message.into() }
}

pub fn parse_obj(text: &str, path: &Path) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut polygons: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let nums = parts
                    .map(|t| t.parse::<f64>().map_err(|_| format_err(path, line_no, format!("bad number '{t}'"))))
                    .collect::<Result<Vec<_>>>()?;
                match nums.len() {
                    3 | 4 => vertices.push([nums[0], nums[1], nums[2]]),
                    6 | 7 => {
                        vertices.push([nums[0], nums[1], nums[2]]);
                        colors.push([nums[3], nums[4], nums[5]]);
                    }
                    n => return Err(format_err(path, line_no, format!("vertex with {n} values"))),
                }
            }
            Some("f") => {
                let idx = parts
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        head.parse::<i64>().map_err(|_| format_err(path, line_no, format!("bad face index '{t}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() < 3 {
                    return Err(format_err(path, line_no, "face with fewer than 3 vertices"));
                }
                polygons.push((line_no, idx));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut resolved = Vec::with_capacity(polygons.len());
    for (line_no, poly) in polygons {
        let face = poly
            .iter()
            .map(|&k| {
                // 1-based, negative counts back from the end
                let i = if k < 0 { n + k } else { k - 1 };
                if k == 0 || i < 0 || i >= n {
                    Err(format_err(path, line_no, format!("vertex index {k} out of range for {n} vertices")))
                } else {
                    Ok(i as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        resolved.push(face);
    }
    let mesh = Mesh::from_polygons(vertices, &resolved)?;
    if !colors.is_empty() && colors.len() == mesh.vertex_count() {
        return Ok(mesh.with_colors(colors)?);
    }
    Ok(mesh)
}

/// OBJ text; vertex colors are appended when present.
pub fn obj_string(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(mesh.vertex_count() * 64 + mesh.face_count() * 24);
    let _ = writeln!(s, "# {} vertices, {} faces", mesh.vertex_count(), mesh.face_count());
    let colors = mesh.colors();
    for (i, v) in mesh.vertices().iter().enumerate() {
        match colors {
            Some(c) => {
                let c = c[i];
                let _ = writeln!(s, "v {} {} {} {} {} {}", v[0], v[1], v[2], c[0], c[1], c[2]);
            }
            None => {
                let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
            }
        }
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

/// ASCII PLY with 8-bit vertex colors (gray when the mesh has none).
pub fn ply_string(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(mesh.vertex_count() * 64 + mesh.face_count() * 24);
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertex_count());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    s.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    let _ = writeln!(s, "element face {}", mesh.face_count());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    let colors = mesh.colors_or_gray();
    for (v, c) in mesh.vertices().iter().zip(&colors) {
        let q = c.map(to_u8);
        let _ = writeln!(s, "{} {} {} {} {} {}", v[0], v[1], v[2], q[0], q[1], q[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

fn to_u8(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_obj(mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, obj_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn write_ply(mesh: &Mesh, path: &Path) -> Result<()> {
    fs::write(path, ply_string(mesh)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColorScale {
    Byte,
    Unit,
}

/// Reads ASCII PLY with `x y z` and optional `red green blue` vertex
/// properties and a face index list.
pub fn parse_ply(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(format_err(path, 1, "missing 'ply' magic")),
    }
    let mut n_vertices = None;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<(String, bool)> = Vec::new();
    let mut current = "";
    let mut header_end = 0;
    for (i, line) in lines.by_ref() {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(format_err(path, i + 1, format!("unsupported PLY format '{fmt}'")));
            }
            ["element", "vertex", n] => {
                current = "vertex";
                n_vertices = Some(n.parse().map_err(|_| format_err(path, i + 1, "bad vertex count"))?);
            }
            ["element", "face", n] => {
                current = "face";
                n_faces = n.parse().map_err(|_| format_err(path, i + 1, "bad face count"))?;
            }
            ["element", ..] => current = "other",
            ["property", ty, name] if current == "vertex" => {
                vertex_props.push((name.to_string(), matches!(*ty, "float" | "double" | "float32" | "float64")));
            }
            ["end_header"] => {
                header_end = i + 1;
                break;
            }
            _ => {}
        }
    }
    let n_vertices = n_vertices.ok_or_else(|| format_err(path, header_end, "no vertex element"))?;
    let col = |name: &str| vertex_props.iter().position(|(p, _)| p == name);
    let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(format_err(path, header_end, "vertex element lacks x/y/z")),
    };
    let rgb = match (col("red"), col("green"), col("blue")) {
        (Some(r), Some(g), Some(b)) => {
            let scale = if vertex_props[r].1 { ColorScale::Unit } else { ColorScale::Byte };
            Some((r, g, b, scale))
        }
        _ => None,
    };
    let mut vertices = Vec::with_capacity(n_vertices);
    let mut colors = Vec::new();
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty());
    for _ in 0..n_vertices {
        let (i, line) = body.next().ok_or_else(|| format_err(path, header_end, "truncated vertex list"))?;
        let v = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| format_err(path, i + 1, format!("bad number '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() < vertex_props.len() {
            return Err(format_err(path, i + 1, "short vertex record"));
        }
        vertices.push([v[ix], v[iy], v[iz]]);
        if let Some((r, g, b, scale)) = rgb {
            let k = if scale == ColorScale::Byte { 1.0 / 255.0 } else { 1.0 };
            colors.push([v[r] * k, v[g] * k, v[b] * k]);
        }
    }
    let mut polygons = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (i, line) = body.next().ok_or_else(|| format_err(path, header_end, "truncated face list"))?;
        let t = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| format_err(path, i + 1, format!("bad index '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        let count = *t.first().ok_or_else(|| format_err(path, i + 1, "empty face record"))?;
        if t.len() < count + 1 {
            return Err(format_err(path, i + 1, "short face record"));
        }
        let face = t[1..=count].to_vec();
        if let Some(&bad) = face.iter().find(|&&k| k >= n_vertices) {
            return Err(format_err(path, i + 1, format!("vertex index {bad} out of range for {n_vertices} vertices")));
        }
        polygons.push(face);
    }
    let mesh = Mesh::from_polygons(vertices, &polygons)?;
    if rgb.is_some() {
        return Ok(mesh.with_colors(colors)?);
    }
    Ok(mesh)
}
