use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{normalizing_transform, BoundingCube, Similarity, Vec3};
use crate::error::{Error, Result};
use crate::fmt_sig9;

/// Indexed triangle mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

/// An undirected edge `(v0, v1)` with `v0 < v1`, and for each incident face
/// the face index and the vertex opposite the edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub v0: u32,
    pub v1: u32,
    pub incident: Vec<(u32, u32)>,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.incident.len() == 2
    }
}

impl TriangleMesh {
    /// Validates indices and rejects faces that repeat a vertex.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v as usize >= n) {
                return Err(Error::DegenerateInput(format!(
                    "face {fi} references a vertex out of range ({n} vertices)"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateInput(format!("face {fi} repeats a vertex")));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalised face normal, `(b - a) x (c - a)`; its length is twice the area.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// The undirected edge table, sorted by `(v0, v1)`.
    pub fn edges(&self) -> Vec<Edge> {
        let mut half: Vec<(u32, u32, u32, u32)> = Vec::with_capacity(self.faces.len() * 3);
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let opposite = f[(k + 2) % 3];
                half.push((a.min(b), a.max(b), fi as u32, opposite));
            }
        }
        half.sort_unstable();
        let mut edges: Vec<Edge> = Vec::new();
        for (v0, v1, face, opposite) in half {
            match edges.last_mut() {
                Some(e) if e.v0 == v0 && e.v1 == v1 => e.incident.push((face, opposite)),
                _ => edges.push(Edge {
                    v0,
                    v1,
                    incident: vec![(face, opposite)],
                }),
            }
        }
        edges
    }

    /// Every edge borders exactly two faces.
    pub fn is_watertight(&self) -> bool {
        !self.faces.is_empty() && self.edges().iter().all(Edge::is_interior)
    }

    pub fn transform(&self, t: &Similarity) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|p| t.apply(p)).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn normalize_to_cube(&self, cube: BoundingCube) -> Result<(TriangleMesh, Similarity)> {
        let t = normalizing_transform(&self.vertices, cube)?;
        Ok((self.transform(&t), t))
    }

    /// Axis-aligned cube `[-h, h]^3` as 12 outward-wound triangles.
    pub fn cube(h: f64) -> TriangleMesh {
        let v = |x: f64, y: f64, z: f64| Vec3::new(x * h, y * h, z * h);
        let vertices = vec![
            v(-1., -1., -1.),
            v(1., -1., -1.),
            v(1., 1., -1.),
            v(-1., 1., -1.),
            v(-1., -1., 1.),
            v(1., -1., 1.),
            v(1., 1., 1.),
            v(-1., 1., 1.),
        ];
        let faces = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [2, 3, 7],
            [2, 7, 6],
            [1, 2, 6],
            [1, 6, 5],
            [0, 4, 7],
            [0, 7, 3],
        ];
        TriangleMesh { vertices, faces }
    }

    /// ASCII OBJ with optional leading comment lines.
    pub fn to_obj(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            for line in c.lines() {
                let _ = writeln!(s, "# {line}");
            }
        }
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z));
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }

    pub fn save_obj(&self, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_obj(comments)).map_err(|e| Error::io(path, e))
    }

    /// Parses `v` and triangular `f` records; other record types are ignored.
    pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| Error::Parse {
                path: None,
                line: i + 1,
                msg,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("v") => {
                    let c = tok
                        .take(3)
                        .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad coordinate `{t}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    if c.len() != 3 {
                        return Err(err("vertex needs three coordinates".into()));
                    }
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let idx = tok
                        .map(|t| {
                            let head = t.split('/').next().unwrap_or("");
                            let k: i64 = head
                                .parse()
                                .map_err(|_| err(format!("bad face index `{t}`")))?;
                            if k < 1 {
                                return Err(err(format!(
                                    "face index {k} out of range (indices are 1-based)"
                                )));
                            }
                            if k as usize > vertices.len() {
                                return Err(err(format!(
                                    "face index {k} exceeds {} vertices",
                                    vertices.len()
                                )));
                            }
                            Ok((k - 1) as u32)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if idx.len() != 3 {
                        return Err(err(format!("only triangles supported, got {} indices", idx.len())));
                    }
                    if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                        return Err(err("degenerate face".into()));
                    }
                    faces.push([idx[0], idx[1], idx[2]]);
                }
                _ => {}
            }
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_obj(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: Some(path.to_path_buf()),
                line,
                msg,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn quad_round_trip() {
        let m = quad();
        let back = TriangleMesh::parse_obj(&m.to_obj(&["quad".into()])).unwrap();
        assert_eq!(back.faces, m.faces);
        for (a, b) in m.vertices.iter().zip(&back.vertices) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_index_is_parse_error() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n";
        match TriangleMesh::parse_obj(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn quads_and_out_of_range_rejected() {
        assert!(TriangleMesh::parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n").is_err());
        assert!(TriangleMesh::parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").is_err());
        // texture/normal suffixes are accepted
        let m = TriangleMesh::parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn tetrahedron_adjacency() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 1 4 3\n";
        let m = TriangleMesh::parse_obj(text).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.faces.len(), 4);
        let edges = m.edges();
        assert_eq!(edges.len(), 6);
        assert!(edges.iter().all(|e| e.incident.len() == 2));
        assert!(m.is_watertight());
    }

    #[test]
    fn construction_validates() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 1]]).is_err());
        assert!(TriangleMesh::new(v, vec![[0, 1, 2]]).is_ok());
    }

    #[test]
    fn cube_is_closed_and_outward() {
        let c = TriangleMesh::cube(0.5);
        assert!(c.is_watertight());
        assert_eq!(c.edges().len(), 18);
        assert!((c.area() - 6.0).abs() < 1e-12);
        for f in 0..12 {
            let [a, b, cc] = c.triangle(f);
            let centroid = (a + b + cc) / 3.0;
            assert!(c.face_cross(f).dot(&centroid) > 0.0);
        }
    }

    #[test]
    fn quad_has_boundary() {
        let m = quad();
        assert!(!m.is_watertight());
        let interior: Vec<_> = m.edges().into_iter().filter(Edge::is_interior).collect();
        assert_eq!(interior.len(), 1);
    }
}
