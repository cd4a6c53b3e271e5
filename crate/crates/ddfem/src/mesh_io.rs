//! The `trimesh 2` ASCII mesh format.
//!
//! ```text
//! trimesh 2
//! vertices N
//! x y            (N lines)
//! cells M
//! v0 v1 v2       (M lines, counter-clockwise)
//! boundary B
//! v0 v1 tag      (B lines, tag is `d` or `t`)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use ddfem_core::mesh::MeshError;
use ddfem_core::{BoundaryTag, TriangleMesh};

#[derive(Debug, thiserror::Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh: {0}")]
    Mesh(#[from] MeshError),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<Vec<&'a str>, MeshIoError> {
        for (i, text) in self.inner.by_ref() {
            self.line = i + 1;
            let fields: Vec<&str> = text.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok(fields);
            }
        }
        Err(self.error("unexpected end of file"))
    }

    fn error(&self, msg: impl Into<String>) -> MeshIoError {
        MeshIoError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T, MeshIoError> {
        s.parse().map_err(|_| self.error(format!("cannot parse `{s}`")))
    }

    fn header(&mut self, keyword: &str) -> Result<usize, MeshIoError> {
        let f = self.next_fields()?;
        if f.len() != 2 || f[0] != keyword {
            return Err(self.error(format!("expected `{keyword} <count>`")));
        }
        self.parse(f[1])
    }

    fn record(&mut self, n: usize) -> Result<Vec<&'a str>, MeshIoError> {
        let f = self.next_fields()?;
        if f.len() != n {
            return Err(self.error(format!("expected {n} fields, found {}", f.len())));
        }
        Ok(f)
    }
}

pub fn parse_mesh(text: &str) -> Result<TriangleMesh, MeshIoError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let head = lines.next_fields()?;
    if head != ["trimesh", "2"] {
        return Err(lines.error("expected header `trimesh 2`"));
    }
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let f = lines.record(2)?;
        vertices.push([lines.parse(f[0])?, lines.parse(f[1])?]);
    }
    let nc = lines.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let f = lines.record(3)?;
        let c: [usize; 3] = [lines.parse(f[0])?, lines.parse(f[1])?, lines.parse(f[2])?];
        if let Some(v) = c.iter().find(|&&v| v >= nv) {
            return Err(lines.error(format!("vertex {v} out of range")));
        }
        cells.push(c);
    }
    let nb = lines.header("boundary")?;
    let mut tags = Vec::with_capacity(nb);
    for _ in 0..nb {
        let f = lines.record(3)?;
        let tag = match f[2] {
            "d" => BoundaryTag::Displacement,
            "t" => BoundaryTag::Traction,
            other => return Err(lines.error(format!("unknown boundary tag `{other}`"))),
        };
        tags.push((
            lines.line,
            lines.parse::<usize>(f[0])?,
            lines.parse::<usize>(f[1])?,
            tag,
        ));
    }
    if let Ok(f) = lines.next_fields() {
        return Err(lines.error(format!("trailing content `{}`", f.join(" "))));
    }
    let mut mesh = TriangleMesh::new(vertices, cells)?;
    for (line, a, b, tag) in tags {
        mesh.set_tag(a, b, tag).map_err(|e| MeshIoError::Parse {
            line,
            msg: e.to_string(),
        })?;
    }
    mesh.check_tags()?;
    Ok(mesh)
}

/// Serialises a fully tagged mesh. Floats use the shortest representation
/// that parses back to the same value.
pub fn format_mesh(mesh: &TriangleMesh) -> Result<String, MeshIoError> {
    mesh.check_tags()?;
    let mut s = String::from("trimesh 2\n");
    writeln!(s, "vertices {}", mesh.n_vertices()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:?} {:?}", v[0], v[1]).unwrap();
    }
    writeln!(s, "cells {}", mesh.n_cells()).unwrap();
    for c in mesh.cells() {
        writeln!(s, "{} {} {}", c[0], c[1], c[2]).unwrap();
    }
    let boundary: Vec<usize> = mesh.boundary_edges().collect();
    writeln!(s, "boundary {}", boundary.len()).unwrap();
    for e in boundary {
        let [a, b] = mesh.edges()[e];
        let tag = match mesh.tag(e) {
            Some(BoundaryTag::Displacement) => 'd',
            _ => 't',
        };
        writeln!(s, "{a} {b} {tag}").unwrap();
    }
    Ok(s)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshIoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mesh(&text)
}

pub fn write_mesh(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<(), MeshIoError> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(mesh)?).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ddfem_core::mesh::{map_mesh, structured_square_mesh, Diagonal};

    const UNIT: &str =
        "trimesh 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 2\n0 1 2\n0 2 3\nboundary 4\n0 1 d\n1 2 t\n2 3 t\n0 3 d\n";

    #[test]
    fn parses_unit_square() {
        let m = parse_mesh(UNIT).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.count_tagged(BoundaryTag::Displacement), 2);
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = map_mesh(
            &structured_square_mesh(3, Diagonal::UpperLeftToLowerRight).unwrap(),
            |p| [p[0] * 0.1 + 1.0 / 3.0, p[1].sin()],
        )
        .unwrap()
        .tag_boundary(|x| {
            if x[0] < 0.34 {
                BoundaryTag::Displacement
            } else {
                BoundaryTag::Traction
            }
        });
        let text = format_mesh(&m).unwrap();
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(format_mesh(&back).unwrap(), text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = UNIT.replace("1 1\n", "1 x\n");
        match parse_mesh(&bad) {
            Err(MeshIoError::Parse { line: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        let bad_tag = UNIT.replace("1 2 t", "1 2 q");
        assert!(matches!(parse_mesh(&bad_tag), Err(MeshIoError::Parse { line: 12, .. })));
        let interior = UNIT.replace("0 3 d", "0 2 d");
        assert!(matches!(
            parse_mesh(&interior),
            Err(MeshIoError::Parse { line: 14, .. })
        ));
        let missing = UNIT.replace("boundary 4", "boundary 3").replace("0 3 d\n", "");
        assert!(matches!(
            parse_mesh(&missing),
            Err(MeshIoError::Mesh(MeshError::UntaggedBoundaryEdge(0, 3)))
        ));
        assert!(matches!(
            parse_mesh("trimesh 3\n"),
            Err(MeshIoError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mesh("trimesh 2\nvertices 2\n0 0\n"),
            Err(MeshIoError::Parse { .. })
        ));
    }
}
