//! OBJ and PLY ingestion, OBJ emission.

use super::{TriMesh, Vec3};
use crate::{Error, Result};
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("obj") => Ok(Self::Obj),
            Some("ply") => Ok(Self::Ply),
            other => Err(Error::Parse(format!("unknown mesh extension {:?}", other))),
        }
    }
}

/// Load and validate a mesh. Multi-component inputs are rejected unless
/// `allow_multi` is set. Degenerate faces are collapsed at load time; the
/// dropped count is reported.
pub fn load_mesh(path: &Path, format: MeshFormat, allow_multi: bool) -> Result<(TriMesh, usize)> {
    let bytes = std::fs::read(path)?;
    let (positions, faces) = match format {
        MeshFormat::Obj => parse_obj(&bytes)?,
        MeshFormat::Ply => parse_ply(&bytes)?,
    };
    let (mesh, dropped) = TriMesh::build_with_report(positions, faces)?;
    let ncomp = mesh.n_components();
    if ncomp > 1 && !allow_multi {
        return Err(Error::MultiComponent(ncomp));
    }
    Ok((mesh, dropped))
}

fn parse_obj(bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    *c = it
                        .next()
                        .ok_or_else(|| Error::Parse(format!("short v record at line {}", lineno + 1)))?
                        .parse()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                }
                positions.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or(tok);
                        first
                            .parse::<i64>()
                            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                            .and_then(|i| {
                                if i >= 1 {
                                    Ok(i as usize - 1)
                                } else {
                                    Err(Error::Parse(format!(
                                        "negative face index at line {}",
                                        lineno + 1
                                    )))
                                }
                            })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::Parse(format!("short f record at line {}", lineno + 1)));
                }
                // Fan-triangulate polygons.
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if positions.is_empty() || faces.is_empty() {
        return Err(Error::Parse("no geometry in OBJ".into()));
    }
    Ok((positions, faces))
}

fn parse_ply(bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    // Header is always ASCII lines terminated by end_header.
    let header_end = find_subsequence(bytes, b"end_header\n")
        .ok_or_else(|| Error::Parse("PLY without end_header".into()))?
        + b"end_header\n".len();
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|e| Error::Parse(e.to_string()))?;
    let mut format = None;
    let mut n_vertices = 0usize;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<(String, String)> = Vec::new();
    let mut in_vertex = false;
    for line in header.lines() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", f, _] => format = Some(f.to_string()),
            ["element", "vertex", n] => {
                n_vertices = n.parse().map_err(|e| Error::Parse(format!("{e}")))?;
                in_vertex = true;
            }
            ["element", "face", n] => {
                n_faces = n.parse().map_err(|e| Error::Parse(format!("{e}")))?;
                in_vertex = false;
            }
            ["element", ..] => in_vertex = false,
            ["property", ty, name] if in_vertex => {
                vertex_props.push((ty.to_string(), name.to_string()));
            }
            _ => {}
        }
    }
    let format = format.ok_or_else(|| Error::Parse("PLY without format line".into()))?;
    let body = &bytes[header_end..];
    match format.as_str() {
        "ascii" => parse_ply_ascii(body, n_vertices, n_faces, &vertex_props),
        "binary_little_endian" => parse_ply_binary(body, n_vertices, n_faces, &vertex_props),
        other => Err(Error::Parse(format!("unsupported PLY format {other}"))),
    }
}

fn parse_ply_ascii(
    body: &[u8],
    n_vertices: usize,
    n_faces: usize,
    props: &[(String, String)],
) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let text = std::str::from_utf8(body).map_err(|e| Error::Parse(e.to_string()))?;
    let mut lines = text.lines();
    let (xi, yi, zi) = coord_indices(props)?;
    let mut positions = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated PLY".into()))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| Error::Parse(format!("{e}"))))
            .collect::<Result<_>>()?;
        positions.push(Vec3::new(vals[xi], vals[yi], vals[zi]));
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated PLY".into()))?;
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| Error::Parse(format!("{e}"))))
            .collect::<Result<_>>()?;
        let n = vals[0];
        for k in 1..n - 1 {
            faces.push([vals[1], vals[1 + k], vals[2 + k]]);
        }
    }
    Ok((positions, faces))
}

fn parse_ply_binary(
    body: &[u8],
    n_vertices: usize,
    n_faces: usize,
    props: &[(String, String)],
) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let (xi, yi, zi) = coord_indices(props)?;
    let mut cursor = body;
    let mut positions = Vec::with_capacity(n_vertices);
    let sizes: Vec<usize> = props.iter().map(|(t, _)| scalar_size(t)).collect();
    for _ in 0..n_vertices {
        let mut vals = vec![0.0f64; props.len()];
        for (k, (ty, _)) in props.iter().enumerate() {
            vals[k] = read_scalar(&mut cursor, ty)?;
        }
        let _ = sizes;
        positions.push(Vec3::new(vals[xi], vals[yi], vals[zi]));
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let n = read_scalar(&mut cursor, "uchar")? as usize;
        let mut idx = Vec::with_capacity(n);
        for _ in 0..n {
            idx.push(read_scalar(&mut cursor, "int")? as usize);
        }
        for k in 1..n - 1 {
            faces.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    Ok((positions, faces))
}

fn coord_indices(props: &[(String, String)]) -> Result<(usize, usize, usize)> {
    let find = |name: &str| {
        props
            .iter()
            .position(|(_, n)| n == name)
            .ok_or_else(|| Error::Parse(format!("PLY vertex property {name} missing")))
    };
    Ok((find("x")?, find("y")?, find("z")?))
}

fn scalar_size(ty: &str) -> usize {
    match ty {
        "char" | "uchar" | "int8" | "uint8" => 1,
        "short" | "ushort" | "int16" | "uint16" => 2,
        "int" | "uint" | "int32" | "uint32" | "float" | "float32" => 4,
        _ => 8,
    }
}

fn read_scalar(cursor: &mut &[u8], ty: &str) -> Result<f64> {
    let size = scalar_size(ty);
    if cursor.len() < size {
        return Err(Error::Parse("truncated PLY body".into()));
    }
    let mut buf = [0u8; 8];
    (&cursor[..size]).read_exact(&mut buf[..size])?;
    *cursor = &cursor[size..];
    let v = match ty {
        "char" | "int8" => buf[0] as i8 as f64,
        "uchar" | "uint8" => buf[0] as f64,
        "short" | "int16" => i16::from_le_bytes([buf[0], buf[1]]) as f64,
        "ushort" | "uint16" => u16::from_le_bytes([buf[0], buf[1]]) as f64,
        "int" | "int32" => i32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
        "uint" | "uint32" => u32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
        "float" | "float32" => f32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
        "double" | "float64" => f64::from_le_bytes(buf),
        other => return Err(Error::Parse(format!("unsupported PLY scalar {other}"))),
    };
    Ok(v)
}

fn find_subsequence(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack
        .windows(needle.len())
        .position(|window| window == needle)
}

/// Emit a mesh as OBJ.
pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(mesh.n_vertices() * 40);
    for p in &mesh.positions {
        out.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    std::fs::write(path, out)?;
    Ok(())
}
