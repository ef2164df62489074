//! ASCII OFF and OBJ readers and an OBJ writer.
//!
//! Triangles and quadrilaterals are accepted; quads are split along their
//! shorter diagonal.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{MeshError, TriangleMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

/// Loads and validates a mesh in the given format.
pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path.display().to_string();
    let (vertices, raw_faces) = match format {
        MeshFormat::Off => parse_off(&text, &name)?,
        MeshFormat::Obj => parse_obj(&text, &name)?,
    };
    let faces = triangulate(&vertices, raw_faces, &name)?;
    TriangleMesh::new(vertices, faces)
}

/// Picks the format from the file extension (`.off` / `.obj`).
pub fn load_mesh_auto(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("off") => load_mesh(path, MeshFormat::Off),
        Some("obj") => load_mesh(path, MeshFormat::Obj),
        _ => Err(MeshError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: "unrecognized mesh extension (expected .off or .obj)".into(),
        }),
    }
}

/// Writes the mesh as ASCII OBJ. Coordinates use shortest round-trip
/// formatting, so a save/load cycle reproduces them exactly.
pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    let mut out = String::new();
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).expect("string write");
    }
    for face in mesh.faces() {
        writeln!(out, "f {} {} {}", face[0] + 1, face[1] + 1, face[2] + 1).expect("string write");
    }
    fs::write(path, out).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A polygon as parsed from the file: 3 or 4 vertex indices.
type RawFace = Vec<usize>;

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_off(text: &str, path: &str) -> Result<(Vec<Vec3>, Vec<RawFace>), MeshError> {
    // (line number, content) with comments and blanks stripped
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 0, "empty OFF file"))?;
    if header != "OFF" {
        return Err(parse_error(path, line_no, "missing OFF header"));
    }
    let (line_no, counts) = lines
        .next()
        .ok_or_else(|| parse_error(path, line_no, "missing OFF count line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_error(path, line_no, format!("bad count: {e}")))?;
    if counts.len() < 2 {
        return Err(parse_error(path, line_no, "expected vertex and face counts"));
    }
    let (n_vertices, n_faces) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| parse_error(path, 0, "unexpected end of file in vertex list"))?;
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_error(path, line_no, format!("bad coordinate: {e}")))?;
        if coords.len() < 3 {
            return Err(parse_error(path, line_no, "expected 3 coordinates"));
        }
        vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| parse_error(path, 0, "unexpected end of file in face list"))?;
        let fields: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_error(path, line_no, format!("bad face index: {e}")))?;
        let n = *fields
            .first()
            .ok_or_else(|| parse_error(path, line_no, "empty face line"))?;
        if fields.len() < n + 1 {
            return Err(parse_error(path, line_no, "face line shorter than its count"));
        }
        if !(3..=4).contains(&n) {
            return Err(parse_error(
                path,
                line_no,
                format!("unsupported polygon with {n} vertices (triangles and quads only)"),
            ));
        }
        faces.push(fields[1..=n].to_vec());
    }
    Ok((vertices, faces))
}

fn parse_obj(text: &str, path: &str) -> Result<(Vec<Vec3>, Vec<RawFace>), MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_error(path, line_no, format!("bad coordinate: {e}")))?;
                if coords.len() < 3 {
                    return Err(parse_error(path, line_no, "expected 3 coordinates"));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut indices = Vec::with_capacity(4);
                for token in tokens {
                    // "i", "i/t", "i/t/n", "i//n" — the position index leads
                    let first = token.split('/').next().unwrap_or("");
                    let idx: i64 = first
                        .parse()
                        .map_err(|e| parse_error(path, line_no, format!("bad face index: {e}")))?;
                    let resolved = if idx > 0 {
                        (idx - 1) as usize
                    } else if idx < 0 {
                        let back = (-idx) as usize;
                        if back > vertices.len() {
                            return Err(parse_error(path, line_no, "relative index out of range"));
                        }
                        vertices.len() - back
                    } else {
                        return Err(parse_error(path, line_no, "face index 0 is invalid"));
                    };
                    indices.push(resolved);
                }
                if !(3..=4).contains(&indices.len()) {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!(
                            "unsupported polygon with {} vertices (triangles and quads only)",
                            indices.len()
                        ),
                    ));
                }
                faces.push(indices);
            }
            // Ignore normals, texture coordinates, groups, materials, etc.
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// Splits quads along the shorter diagonal; passes triangles through.
fn triangulate(
    vertices: &[Vec3],
    raw_faces: Vec<RawFace>,
    path: &str,
) -> Result<Vec<[usize; 3]>, MeshError> {
    let mut faces = Vec::with_capacity(raw_faces.len());
    for (f, raw) in raw_faces.into_iter().enumerate() {
        for &v in &raw {
            if v >= vertices.len() {
                return Err(MeshError::IndexOutOfRange {
                    face: f,
                    vertex: v,
                    n_vertices: vertices.len(),
                });
            }
        }
        match raw.len() {
            3 => faces.push([raw[0], raw[1], raw[2]]),
            4 => {
                let [a, b, c, d] = [raw[0], raw[1], raw[2], raw[3]];
                let diag_ac = (vertices[c] - vertices[a]).norm();
                let diag_bd = (vertices[d] - vertices[b]).norm();
                if diag_ac <= diag_bd {
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                } else {
                    faces.push([a, b, d]);
                    faces.push([b, c, d]);
                }
            }
            n => {
                return Err(parse_error(
                    path,
                    0,
                    format!("unsupported polygon with {n} vertices after parsing"),
                ))
            }
        }
    }
    Ok(faces)
}
