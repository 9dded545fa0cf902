use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{aabb, normalizing_transform, BoundingCube, Similarity, Vec3};
use crate::error::{Error, Result};
use crate::fmt_sig9;

/// An ordered list of points with optional per-point unit normals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            normals: None,
        }
    }

    pub fn with_normals(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        Ok(Self {
            points,
            normals: Some(normals),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        aabb(&self.points)
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vec3 = self.points.iter().sum();
        Some(sum / self.points.len() as f64)
    }

    /// Rescales into `cube`; normals are unaffected by a uniform similarity.
    pub fn normalize_to_cube(&self, cube: BoundingCube) -> Result<(PointCloud, Similarity)> {
        let t = normalizing_transform(&self.points, cube)?;
        let cloud = PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            normals: self.normals.clone(),
        };
        Ok((cloud, t))
    }

    /// Concatenation, `self` first. Normals survive only if both have them.
    pub fn concat(&self, other: &PointCloud) -> PointCloud {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let normals = match (&self.normals, &other.normals) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        PointCloud { points, normals }
    }

    /// Writes `x y z` per line (nine significant digits), followed by
    /// `nx ny nz` when normals are present.
    pub fn write_xyz(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            write!(w, "{} {} {}", fmt_sig9(p.x), fmt_sig9(p.y), fmt_sig9(p.z))?;
            if let Some(n) = &self.normals {
                let n = n[i];
                write!(w, " {} {} {}", fmt_sig9(n.x), fmt_sig9(n.y), fmt_sig9(n.z))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_xyz(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_xyz(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Parses XYZ text: 3 or 6 numbers per line; blank lines and `#` comments skipped.
    pub fn parse_xyz(text: &str) -> Result<PointCloud> {
        let mut points = Vec::new();
        let mut normals = Vec::new();
        let mut columns = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: None,
                line: i + 1,
                msg,
            };
            let vals = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| parse_err(format!("not a number: `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 3 && vals.len() != 6 {
                return Err(parse_err(format!("expected 3 or 6 values, got {}", vals.len())));
            }
            if *columns.get_or_insert(vals.len()) != vals.len() {
                return Err(parse_err("inconsistent column count".into()));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(parse_err("non-finite coordinate".into()));
            }
            points.push(Vec3::new(vals[0], vals[1], vals[2]));
            if vals.len() == 6 {
                normals.push(Vec3::new(vals[3], vals[4], vals[5]));
            }
        }
        Ok(PointCloud {
            normals: (!normals.is_empty()).then_some(normals),
            points,
        })
    }

    pub fn load_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_xyz(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: Some(path.to_path_buf()),
                line,
                msg,
            },
            other => other,
        })
    }
}
