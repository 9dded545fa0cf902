//! Surface sampling from fields and supervision query batches.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::{BoundingCube, PointCloud, ScalarField, Vec3};
use crate::rng::{self, tag, Rng};

/// Projection tolerance on `|f(p)|`.
pub const PROJECTION_TOL: f64 = 1e-6;
pub const PROJECTION_MAX_ITERS: usize = 50;
/// Candidates drawn per requested surface point before thinning.
const OVERSAMPLING: usize = 4;

/// Newton projection onto the zero level set:
/// `p <- p - f(p) grad f(p) / |grad f(p)|^2`. Returns `None` when the
/// tolerance is not reached within the iteration budget.
pub fn project_to_surface(field: &impl ScalarField, start: Vec3) -> Option<Vec3> {
    let mut p = start;
    for _ in 0..PROJECTION_MAX_ITERS {
        let f = field.eval(&p);
        if f.abs() <= PROJECTION_TOL {
            return Some(p);
        }
        let g = field.gradient(&p);
        let g2 = g.norm_squared();
        if !(g2 > 1e-12) || !f.is_finite() {
            return None;
        }
        p -= g * (f / g2);
    }
    (field.eval(&p).abs() <= PROJECTION_TOL).then_some(p)
}

/// Greedy farthest-point subsampling, starting from index 0.
pub fn farthest_point_subsample(points: &[Vec3], n: usize) -> Vec<usize> {
    if points.is_empty() || n == 0 {
        return Vec::new();
    }
    let n = n.min(points.len());
    let mut chosen = Vec::with_capacity(n);
    let mut dist = vec![f64::INFINITY; points.len()];
    let mut current = 0usize;
    for _ in 0..n {
        chosen.push(current);
        let c = points[current];
        let mut far = 0usize;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let d = (p - c).norm_squared();
            if d < dist[i] {
                dist[i] = d;
            }
            if dist[i] > far_d {
                far_d = dist[i];
                far = i;
            }
        }
        current = far;
    }
    chosen
}

/// `n` points on the zero level set of `field` inside `cube`, approximately
/// area-uniform, with unit normals from the field gradient.
///
/// Uniform candidates are Newton-projected onto the surface and then thinned
/// by farthest-point subsampling.
pub fn sample_surface(
    field: &impl ScalarField,
    cube: BoundingCube,
    n: usize,
    seed: u64,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::DegenerateInput("requested zero surface samples".into()));
    }
    let total = (n * OVERSAMPLING).max(256);
    let mut rng = rng::substream(seed, &[tag::SURFACE]);
    let mut projected = Vec::with_capacity(total);
    let mut failed = 0usize;
    for _ in 0..total {
        let start = uniform_point(&mut rng, cube.half_extent());
        match project_to_surface(field, start) {
            Some(p) if p.iter().all(|c| c.is_finite()) => projected.push(p),
            _ => failed += 1,
        }
    }
    if failed * 100 > total || projected.len() < n {
        return Err(Error::ConvergenceFailure { failed, total });
    }
    let picked = farthest_point_subsample(&projected, n);
    let points: Vec<Vec3> = picked.iter().map(|&i| projected[i]).collect();
    let normals = points
        .iter()
        .map(|p| {
            let g = field.gradient(p);
            let len = g.norm();
            if len > 0.0 {
                g / len
            } else {
                Vec3::z()
            }
        })
        .collect();
    PointCloud::with_normals(points, normals)
}

pub(crate) fn uniform_point(rng: &mut Rng, h: f64) -> Vec3 {
    let x: f64 = rng.random();
    let y: f64 = rng.random();
    let z: f64 = rng.random();
    Vec3::new(h * (2.0 * x - 1.0), h * (2.0 * y - 1.0), h * (2.0 * z - 1.0))
}

/// `n` i.i.d. uniform points in the cube from the substream `(seed, UNIFORM)`.
pub fn uniform_in_cube(n: usize, cube: BoundingCube, seed: u64) -> Vec<Vec3> {
    let mut rng = rng::substream(seed, &[tag::UNIFORM]);
    (0..n).map(|_| uniform_point(&mut rng, cube.half_extent())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    NearSurface,
    UniformVolume,
}

/// Supervision locations: both noisy clouds followed by uniform volume samples.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryBatch {
    pub points: Vec<Vec3>,
    pub provenance: Vec<Provenance>,
}

impl QueryBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, kind: Provenance) -> usize {
        self.provenance.iter().filter(|&&p| p == kind).count()
    }
}

/// Concatenates `p1`, `p2` (tagged near-surface) and `n_uniform` cube samples.
pub fn build_query_batch(
    p1: &PointCloud,
    p2: &PointCloud,
    n_uniform: usize,
    cube: BoundingCube,
    seed: u64,
) -> Result<QueryBatch> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::EmptySet);
    }
    let near = p1.len() + p2.len();
    let mut points = Vec::with_capacity(near + n_uniform);
    points.extend_from_slice(&p1.points);
    points.extend_from_slice(&p2.points);
    points.extend(uniform_in_cube(n_uniform, cube, seed));
    let mut provenance = vec![Provenance::NearSurface; near];
    provenance.resize(near + n_uniform, Provenance::UniformVolume);
    Ok(QueryBatch { points, provenance })
}
