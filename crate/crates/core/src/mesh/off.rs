//! ASCII OFF mesh reader and writer.

use super::{MeshError, SurfaceMesh};
use nalgebra::Point3;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OffError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub fn read_off(path: &Path) -> Result<SurfaceMesh, OffError> {
    read_off_str(&std::fs::read_to_string(path)?)
}

pub fn read_off_str(text: &str) -> Result<SurfaceMesh, OffError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or(OffError::Parse {
        line: 0,
        message: "empty file".into(),
    })?;
    if header != "OFF" {
        return Err(OffError::Parse {
            line,
            message: format!("expected OFF header, found {header:?}"),
        });
    }
    let (line, counts) = lines.next().ok_or(OffError::Parse {
        line,
        message: "missing count line".into(),
    })?;
    let mut it = counts.split_whitespace();
    let nv: usize = parse_field(&mut it, line, "vertex count")?;
    let nf: usize = parse_field(&mut it, line, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = lines.next().ok_or(OffError::Parse {
            line: 0,
            message: "unexpected end of file in vertex list".into(),
        })?;
        let mut it = text.split_whitespace();
        let x: f64 = parse_field(&mut it, line, "x")?;
        let y: f64 = parse_field(&mut it, line, "y")?;
        let z: f64 = parse_field(&mut it, line, "z")?;
        vertices.push(Point3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, text) = lines.next().ok_or(OffError::Parse {
            line: 0,
            message: "unexpected end of file in face list".into(),
        })?;
        let mut it = text.split_whitespace();
        let arity: usize = parse_field(&mut it, line, "face arity")?;
        if arity != 3 {
            return Err(OffError::Parse {
                line,
                message: format!("only triangles are supported, found {arity}-gon"),
            });
        }
        let a: usize = parse_field(&mut it, line, "index")?;
        let b: usize = parse_field(&mut it, line, "index")?;
        let c: usize = parse_field(&mut it, line, "index")?;
        faces.push([a, b, c]);
    }
    Ok(SurfaceMesh::build(vertices, faces)?)
}

fn parse_field<T: std::str::FromStr>(
    it: &mut std::str::SplitWhitespace<'_>,
    line: usize,
    what: &str,
) -> Result<T, OffError> {
    it.next()
        .ok_or_else(|| OffError::Parse {
            line,
            message: format!("missing {what}"),
        })?
        .parse()
        .map_err(|_| OffError::Parse {
            line,
            message: format!("invalid {what}"),
        })
}

pub fn write_off(mesh: &SurfaceMesh, path: &Path) -> Result<(), OffError> {
    std::fs::write(path, write_off_string(mesh))?;
    Ok(())
}

pub fn write_off_string(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "OFF");
    let _ = writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count());
    for v in mesh.vertices() {
        // Shortest round-trip float formatting keeps the file lossless.
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{spherical_cap_mesh, CapGeometry};

    #[test]
    fn off_round_trip_is_lossless() {
        let mesh = spherical_cap_mesh(80, CapGeometry::default()).unwrap();
        let text = write_off_string(&mesh);
        let back = read_off_str(&text).unwrap();
        assert_eq!(mesh.vertex_count(), back.vertex_count());
        assert_eq!(mesh.faces(), back.faces());
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn off_accepts_comments_and_blank_lines() {
        let text = "OFF\n# a comment\n\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let mesh = read_off_str(text).unwrap();
        assert_eq!(mesh.vertex_count(), 3);
    }

    #[test]
    fn off_rejects_quads() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(
            read_off_str(text),
            Err(OffError::Parse { .. })
        ));
    }

    #[test]
    fn off_rejects_bad_header() {
        assert!(read_off_str("PLY\n").is_err());
    }
}
