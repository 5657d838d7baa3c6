//! Reader for the ASCII Gmsh MSH 2.2 format.
//!
//! Only the `$MeshFormat`, `$Nodes` and `$Elements` sections are interpreted.
//! Four-node tetrahedra (element type 4) become mesh cells; every other
//! element type is skipped, and physical/elementary tags are ignored.

use std::collections::HashMap;

use super::{Mesh, MeshError, Point};

const TETRAHEDRON: u32 = 4;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum GmshError {
    #[error("malformed gmsh data near line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing section ${0}")]
    MissingSection(&'static str),
    #[error("unsupported gmsh format version {0} (only ASCII 2.2 is supported)")]
    UnsupportedVersion(String),
    #[error("element {element} references unknown node {node}")]
    UnknownNode { element: usize, node: usize },
    #[error("no 4-node tetrahedra found")]
    NoTetrahedra,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Some(l);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, GmshError> {
        self.next_nonempty().ok_or_else(|| GmshError::Malformed {
            line: self.line,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn malformed(&self, message: impl Into<String>) -> GmshError {
        GmshError::Malformed {
            line: self.line,
            message: message.into(),
        }
    }

    fn end_section(&mut self, name: &str) -> Result<(), GmshError> {
        let l = self.expect(&format!("$End{name}"))?;
        if l != format!("$End{name}") {
            return Err(self.malformed(format!("expected $End{name}, found {l:?}")));
        }
        Ok(())
    }
}

fn parse<T: std::str::FromStr>(
    lines: &Lines,
    token: Option<&str>,
    what: &str,
) -> Result<T, GmshError> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.malformed(format!("could not parse {what}")))
}

/// Parses a Gmsh 2.2 ASCII mesh. Node identifiers are remapped to dense
/// zero-based indices in order of appearance; nodes not used by any
/// tetrahedron are dropped.
pub fn read_gmsh(text: &str) -> Result<Mesh, GmshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut format_seen = false;
    let mut nodes: Option<(Vec<Point>, HashMap<usize, usize>)> = None;
    let mut tets: Option<Vec<(usize, [usize; 4])>> = None;

    while let Some(header) = lines.next_nonempty() {
        match header {
            "$MeshFormat" => {
                let l = lines.expect("format line")?;
                let mut tok = l.split_whitespace();
                let version = tok.next().unwrap_or_default().to_string();
                let file_type: u32 = parse(&lines, tok.next(), "file type")?;
                if version != "2.2" {
                    return Err(GmshError::UnsupportedVersion(version));
                }
                if file_type != 0 {
                    return Err(GmshError::UnsupportedVersion(format!("{version} (binary)")));
                }
                lines.end_section("MeshFormat")?;
                format_seen = true;
            }
            "$Nodes" => {
                let l = lines.expect("node count")?;
                let count: usize = parse(&lines, Some(l), "node count")?;
                let mut points = Vec::with_capacity(count);
                let mut ids = HashMap::with_capacity(count);
                for _ in 0..count {
                    let l = lines.expect("node line")?;
                    let mut tok = l.split_whitespace();
                    let id: usize = parse(&lines, tok.next(), "node id")?;
                    let x: f64 = parse(&lines, tok.next(), "x coordinate")?;
                    let y: f64 = parse(&lines, tok.next(), "y coordinate")?;
                    let z: f64 = parse(&lines, tok.next(), "z coordinate")?;
                    if ids.insert(id, points.len()).is_some() {
                        return Err(lines.malformed(format!("duplicate node id {id}")));
                    }
                    points.push(Point::new(x, y, z));
                }
                lines.end_section("Nodes")?;
                nodes = Some((points, ids));
            }
            "$Elements" => {
                let l = lines.expect("element count")?;
                let count: usize = parse(&lines, Some(l), "element count")?;
                let mut found = Vec::new();
                for _ in 0..count {
                    let l = lines.expect("element line")?;
                    let mut tok = l.split_whitespace();
                    let id: usize = parse(&lines, tok.next(), "element id")?;
                    let kind: u32 = parse(&lines, tok.next(), "element type")?;
                    let ntags: usize = parse(&lines, tok.next(), "tag count")?;
                    for _ in 0..ntags {
                        let _: i64 = parse(&lines, tok.next(), "tag")?;
                    }
                    if kind != TETRAHEDRON {
                        continue;
                    }
                    let mut tet = [0usize; 4];
                    for v in tet.iter_mut() {
                        *v = parse(&lines, tok.next(), "tetrahedron node")?;
                    }
                    found.push((id, tet));
                }
                lines.end_section("Elements")?;
                tets = Some(found);
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // unknown section: skip to its end marker
                let end = format!("$End{}", &other[1..]);
                loop {
                    if lines.expect(&end)? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.malformed(format!("unexpected line {other:?}"))),
        }
    }

    if !format_seen {
        return Err(GmshError::MissingSection("MeshFormat"));
    }
    let (points, ids) = nodes.ok_or(GmshError::MissingSection("Nodes"))?;
    let raw_tets = tets.ok_or(GmshError::MissingSection("Elements"))?;
    if raw_tets.is_empty() {
        return Err(GmshError::NoTetrahedra);
    }

    let mut cells = Vec::with_capacity(raw_tets.len());
    let mut used = vec![false; points.len()];
    for (element, tet) in raw_tets {
        let mut cell = [0usize; 4];
        for (c, &node) in cell.iter_mut().zip(tet.iter()) {
            *c = *ids
                .get(&node)
                .ok_or(GmshError::UnknownNode { element, node })?;
            used[*c] = true;
        }
        cells.push(cell);
    }
    let mut dense = vec![usize::MAX; points.len()];
    let mut vertices = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate().filter(|(i, _)| used[*i]) {
        dense[i] = vertices.len();
        vertices.push(*p);
    }
    for cell in cells.iter_mut() {
        for v in cell.iter_mut() {
            *v = dense[*v];
        }
    }
    Ok(Mesh::new(vertices, cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE_TET: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
1
1 4 2 0 1 1 2 3 4
$EndElements
";

    #[test]
    fn reads_single_tet() {
        let mesh = read_gmsh(SINGLE_TET).unwrap();
        assert_eq!(mesh.num_tets(), 1);
        assert_eq!(mesh.num_vertices(), 4);
        assert!((mesh.volume(0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ignores_triangles_and_points() {
        let text = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
1
3 1 \"volume\"
$EndPhysicalNames
$Nodes
4
10 0 0 0
20 1 0 0
30 0 1 0
40 0 0 1
$EndNodes
$Elements
6
1 15 2 0 1 10
2 2 2 0 1 10 20 30
3 2 2 0 1 10 20 40
4 2 2 0 1 10 30 40
5 2 2 0 1 20 30 40
6 4 2 1 1 10 20 30 40
$EndElements
";
        let mesh = read_gmsh(text).unwrap();
        assert_eq!(mesh.num_tets(), 1);
        assert_eq!(mesh.num_vertices(), 4);
        assert!((mesh.volume(0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_version_4() {
        let text = SINGLE_TET.replace("2.2 0 8", "4.1 0 8");
        assert_eq!(
            read_gmsh(&text),
            Err(GmshError::UnsupportedVersion("4.1".into()))
        );
    }

    #[test]
    fn rejects_binary() {
        let text = SINGLE_TET.replace("2.2 0 8", "2.2 1 8");
        assert!(matches!(
            read_gmsh(&text),
            Err(GmshError::UnsupportedVersion(_))
        ));
    }

    #[test]
    fn rejects_mesh_without_tets() {
        let text = SINGLE_TET.replace("1 4 2 0 1 1 2 3 4", "1 2 2 0 1 1 2 3");
        assert_eq!(read_gmsh(&text), Err(GmshError::NoTetrahedra));
    }

    #[test]
    fn rejects_bad_headers() {
        let text = SINGLE_TET.replace("$EndNodes", "$EndNode");
        assert!(matches!(read_gmsh(&text), Err(GmshError::Malformed { .. })));
        let text = SINGLE_TET.replace("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n", "");
        assert_eq!(
            read_gmsh(&text),
            Err(GmshError::MissingSection("MeshFormat"))
        );
        let text = SINGLE_TET.replace("1 4 2 0 1 1 2 3 4", "1 4 2 0 1 1 2 3 9");
        assert_eq!(
            read_gmsh(&text),
            Err(GmshError::UnknownNode {
                element: 1,
                node: 9
            })
        );
    }
}
