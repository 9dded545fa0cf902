//! Ground-truth shapes, point clouds, triangle meshes and normalisation.

mod cloud;
mod mesh;
mod sdf;

pub use cloud::PointCloud;
pub use mesh::{Edge, TriangleMesh};
pub use sdf::{AnalyticSdf, ShapeId};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Step used for central-difference gradients of arbitrary fields.
pub const GRADIENT_STEP: f64 = 1e-5;

/// Anything that maps a point in space to a signed distance (negative inside).
pub trait ScalarField: Sync {
    fn eval(&self, q: &Vec3) -> f64;

    /// Batched evaluation; implementors with a cheaper batched path override it.
    fn eval_many(&self, qs: &[Vec3]) -> Vec<f64> {
        qs.iter().map(|q| self.eval(q)).collect()
    }

    /// Central-difference gradient.
    fn gradient(&self, q: &Vec3) -> Vec3 {
        let h = GRADIENT_STEP;
        let mut g = Vec3::zeros();
        for axis in 0..3 {
            let mut e = Vec3::zeros();
            e[axis] = h;
            g[axis] = (self.eval(&(q + e)) - self.eval(&(q - e))) / (2.0 * h);
        }
        g
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn eval(&self, q: &Vec3) -> f64 {
        (**self).eval(q)
    }
    fn eval_many(&self, qs: &[Vec3]) -> Vec<f64> {
        (**self).eval_many(qs)
    }
    fn gradient(&self, q: &Vec3) -> Vec3 {
        (**self).gradient(q)
    }
}

/// The axis-aligned cube `[-h, h]^3` that shapes and clouds live in.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundingCube {
    half_extent: f64,
}

impl BoundingCube {
    pub fn new(half_extent: f64) -> Result<Self> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "cube half extent must be positive, got {half_extent}"
            )));
        }
        Ok(Self { half_extent })
    }

    /// `[-0.5, 0.5]^3`.
    pub fn unit() -> Self {
        Self { half_extent: 0.5 }
    }

    /// `[-1, 1]^3`.
    pub fn symmetric() -> Self {
        Self { half_extent: 1.0 }
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.half_extent * 3f64.sqrt()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        p.iter().all(|c| c.abs() <= self.half_extent)
    }
}

impl Default for BoundingCube {
    fn default() -> Self {
        Self::unit()
    }
}

/// Uniform scale followed by a translation: `p -> scale * p + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub translation: Vec3,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        p * self.scale + self.translation
    }
}

/// Axis-aligned bounds of a point list, `None` when empty.
pub fn aabb(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = points.first()?;
    let mut lo = *first;
    let mut hi = *first;
    for p in &points[1..] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    Some((lo, hi))
}

/// The similarity that centres `points`' bounding box at the origin and makes
/// its largest half-dimension equal to the cube's half extent.
pub fn normalizing_transform(points: &[Vec3], cube: BoundingCube) -> Result<Similarity> {
    let (lo, hi) =
        aabb(points).ok_or_else(|| Error::DegenerateInput("no points to normalize".into()))?;
    let center = (lo + hi) * 0.5;
    let half = (hi - lo).max() * 0.5;
    if !(half > 0.0) {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let scale = cube.half_extent() / half;
    Ok(Similarity {
        scale,
        translation: -center * scale,
    })
}

/// Applies [`normalizing_transform`] and returns the transformed points with it.
pub fn normalize_points(points: &[Vec3], cube: BoundingCube) -> Result<(Vec<Vec3>, Similarity)> {
    let t = normalizing_transform(points, cube)?;
    Ok((points.iter().map(|p| t.apply(p)).collect(), t))
}
