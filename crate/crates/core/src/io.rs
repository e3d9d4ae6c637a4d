//! Plain-text mesh and point-set formats: Wavefront OBJ (`v`/`f` records only)
//! and whitespace-separated XYZ point lists.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::mesh::{Mesh, MeshError, Point3};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64, IoError> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad number {tok:?}")))
}

/// Parse OBJ text. Slashed face references (`f 1/2/3 ...`) keep only the
/// vertex index; negative indices count back from the latest vertex.
pub fn parse_obj(text: &str) -> Result<Mesh, IoError> {
    let mut vertices: Vec<Point3> = Vec::new();
    let mut polygons: Vec<Vec<usize>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push([x, y, z]);
            }
            Some("f") => {
                let mut poly = Vec::with_capacity(4);
                for tok in toks {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| parse_err(line, format!("bad face index {tok:?}")))?;
                    let resolved = match idx {
                        0 => return Err(parse_err(line, "face index 0 is invalid in OBJ")),
                        n if n > 0 => n - 1,
                        n => vertices.len() as i64 + n,
                    };
                    if resolved < 0 {
                        return Err(parse_err(line, format!("face index {idx} out of range")));
                    }
                    poly.push(resolved as usize);
                }
                if !(3..=4).contains(&poly.len()) {
                    return Err(parse_err(line, format!("face with {} vertices; only 3 or 4 supported", poly.len())));
                }
                polygons.push(poly);
            }
            _ => {}
        }
    }
    Ok(Mesh::from_polygons(vertices, &polygons)?)
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<Mesh, IoError> {
    parse_obj(&fs::read_to_string(path)?)
}

/// Faces are written as stored: `f i j k` or `f i j k l`, 1-based.
pub fn format_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        out.push('f');
        for i in f.indices() {
            let _ = write!(out, " {}", i + 1);
        }
        out.push('\n');
    }
    out
}

pub fn write_obj(path: impl AsRef<Path>, mesh: &Mesh) -> Result<(), IoError> {
    Ok(fs::write(path, format_obj(mesh))?)
}

/// One `x y z` per non-empty line; `#` starts a comment.
pub fn parse_xyz(text: &str) -> Result<Vec<Point3>, IoError> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        if toks.clone().next().is_none() {
            continue;
        }
        let p = [parse_f64(toks.next(), i + 1)?, parse_f64(toks.next(), i + 1)?, parse_f64(toks.next(), i + 1)?];
        points.push(p);
    }
    Ok(points)
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<Vec<Point3>, IoError> {
    parse_xyz(&fs::read_to_string(path)?)
}

pub fn format_xyz(points: &[Point3]) -> String {
    let mut out = String::with_capacity(points.len() * 32);
    for p in points {
        let _ = writeln!(out, "{} {} {}", p[0], p[1], p[2]);
    }
    out
}

pub fn write_xyz(path: impl AsRef<Path>, points: &[Point3]) -> Result<(), IoError> {
    Ok(fs::write(path, format_xyz(points))?)
}
