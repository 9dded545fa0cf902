use std::fmt;
use std::str::FromStr;

use super::{BoundingCube, ScalarField, Vec3};
use crate::error::{Error, Result};

/// Closed-form signed-distance shapes used as ground truth.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticSdf {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    Box {
        center: Vec3,
        half_extents: Vec3,
    },
    /// Torus around the z axis through `center`.
    Torus {
        center: Vec3,
        major_radius: f64,
        minor_radius: f64,
    },
    /// `min(left, right)`: exact outside the overlap, a lower bound inside it.
    Union(Box<AnalyticSdf>, Box<AnalyticSdf>),
    /// Polynomial smooth minimum with blend radius `blend`.
    SmoothUnion {
        left: Box<AnalyticSdf>,
        right: Box<AnalyticSdf>,
        blend: f64,
    },
}

impl AnalyticSdf {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Self::Sphere { center, radius }
    }

    pub fn cuboid(center: Vec3, half_extents: Vec3) -> Self {
        Self::Box {
            center,
            half_extents,
        }
    }

    pub fn torus(center: Vec3, major_radius: f64, minor_radius: f64) -> Self {
        Self::Torus {
            center,
            major_radius,
            minor_radius,
        }
    }

    pub fn union(left: AnalyticSdf, right: AnalyticSdf) -> Self {
        Self::Union(Box::new(left), Box::new(right))
    }

    pub fn smooth_union(left: AnalyticSdf, right: AnalyticSdf, blend: f64) -> Self {
        Self::SmoothUnion {
            left: Box::new(left),
            right: Box::new(right),
            blend,
        }
    }

    pub fn distance(&self, q: &Vec3) -> f64 {
        match self {
            Self::Sphere { center, radius } => (q - center).norm() - radius,
            Self::Box {
                center,
                half_extents,
            } => {
                let d = (q - center).abs() - half_extents;
                let outside = d.map(|c| c.max(0.0)).norm();
                let inside = d.max().min(0.0);
                outside + inside
            }
            Self::Torus {
                center,
                major_radius,
                minor_radius,
            } => {
                let p = q - center;
                let radial = p.x.hypot(p.y) - major_radius;
                radial.hypot(p.z) - minor_radius
            }
            Self::Union(a, b) => a.distance(q).min(b.distance(q)),
            Self::SmoothUnion { left, right, blend } => {
                let a = left.distance(q);
                let b = right.distance(q);
                if *blend <= 0.0 {
                    return a.min(b);
                }
                let h = (0.5 + 0.5 * (b - a) / blend).clamp(0.0, 1.0);
                b * (1.0 - h) + a * h - blend * h * (1.0 - h)
            }
        }
    }

    /// Points of the shape's skeleton. Outward normals point away from the
    /// nearest anchor, which the frozen target estimator uses for orientation.
    pub fn orientation_anchors(&self) -> Vec<Vec3> {
        match self {
            Self::Sphere { center, .. } | Self::Box { center, .. } => vec![*center],
            Self::Torus {
                center,
                major_radius,
                ..
            } => (0..64)
                .map(|i| {
                    let t = i as f64 / 64.0 * std::f64::consts::TAU;
                    center + Vec3::new(major_radius * t.cos(), major_radius * t.sin(), 0.0)
                })
                .collect(),
            Self::Union(a, b) => {
                let mut v = a.orientation_anchors();
                v.extend(b.orientation_anchors());
                v
            }
            Self::SmoothUnion { left, right, .. } => {
                let mut v = left.orientation_anchors();
                v.extend(right.orientation_anchors());
                v
            }
        }
    }

    /// Axis-aligned bounds of the zero level set.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        match self {
            Self::Sphere { center, radius } => {
                let r = Vec3::repeat(*radius);
                (center - r, center + r)
            }
            Self::Box {
                center,
                half_extents,
            } => (center - half_extents, center + half_extents),
            Self::Torus {
                center,
                major_radius,
                minor_radius,
            } => {
                let e = Vec3::new(
                    major_radius + minor_radius,
                    major_radius + minor_radius,
                    *minor_radius,
                );
                (center - e, center + e)
            }
            Self::Union(a, b) => {
                let (alo, ahi) = a.bounds();
                let (blo, bhi) = b.bounds();
                (alo.inf(&blo), ahi.sup(&bhi))
            }
            Self::SmoothUnion { left, right, blend } => {
                let (alo, ahi) = left.bounds();
                let (blo, bhi) = right.bounds();
                // smooth min never exceeds blend/4 below min(a, b)
                let pad = Vec3::repeat(blend.max(0.0) * 0.25);
                (alo.inf(&blo) - pad, ahi.sup(&bhi) + pad)
            }
        }
    }

    pub fn fits_in(&self, cube: BoundingCube) -> bool {
        let (lo, hi) = self.bounds();
        cube.contains(&lo) && cube.contains(&hi)
    }
}

impl ScalarField for AnalyticSdf {
    fn eval(&self, q: &Vec3) -> f64 {
        self.distance(q)
    }
}

/// Named ground-truth presets, all inside `[-0.5, 0.5]^3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShapeId {
    Sphere,
    Box,
    Torus,
    Blend,
}

impl ShapeId {
    pub const ALL: [ShapeId; 4] = [Self::Sphere, Self::Box, Self::Torus, Self::Blend];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Box => "box",
            Self::Torus => "torus",
            Self::Blend => "blend",
        }
    }

    pub fn sdf(&self) -> AnalyticSdf {
        let o = Vec3::zeros();
        match self {
            Self::Sphere => AnalyticSdf::sphere(o, 0.4),
            Self::Box => AnalyticSdf::cuboid(o, Vec3::repeat(0.3)),
            Self::Torus => AnalyticSdf::torus(o, 0.3, 0.1),
            Self::Blend => AnalyticSdf::smooth_union(
                AnalyticSdf::sphere(Vec3::new(-0.12, 0.0, 0.0), 0.25),
                AnalyticSdf::cuboid(Vec3::new(0.17, 0.0, 0.0), Vec3::new(0.18, 0.15, 0.15)),
                0.05,
            ),
        }
    }
}

impl fmt::Display for ShapeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s.trim())
            .ok_or_else(|| Error::config("shape", format!("unknown shape `{s}`")))
    }
}
