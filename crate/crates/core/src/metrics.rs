//! Surface reconstruction metrics.
//!
//! Point-set metrics use a k-d tree for nearest-neighbour queries. Per-point
//! distances are gathered in input order and summed sequentially, so results
//! are identical to an exhaustive search.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{marching_cubes, GridSpec};
use crate::geometry::{AnalyticSdf, BoundingCube, PointCloud, ScalarField, TriangleMesh, Vec3};
use crate::kdtree::KdTree;
use crate::rng::{substream, tag};
use crate::sampling::{project_to_surface, uniform_in_cube};

pub const DEFAULT_TAU: f64 = 0.02;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_IOU_SAMPLES: usize = 100_000;

/// Distance from every point of `from` to its nearest neighbour in `to`.
pub fn nearest_distances(from: &[Vec3], to: &KdTree) -> Vec<f64> {
    from.par_iter()
        .map(|p| to.nearest(p).map_or(f64::INFINITY, |n| n.dist()))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn non_empty(p: &[Vec3], q: &[Vec3]) -> Result<()> {
    if p.is_empty() || q.is_empty() {
        Err(Error::EmptySet)
    } else {
        Ok(())
    }
}

/// Two-sided mean nearest-neighbour Euclidean distance.
pub fn chamfer(p: &[Vec3], q: &[Vec3]) -> Result<f64> {
    non_empty(p, q)?;
    let (tp, tq) = (KdTree::build(p), KdTree::build(q));
    Ok(chamfer_indexed(p, &tp, q, &tq))
}

fn chamfer_indexed(p: &[Vec3], tp: &KdTree, q: &[Vec3], tq: &KdTree) -> f64 {
    mean(&nearest_distances(p, tq)) + mean(&nearest_distances(q, tp))
}

/// F1 of precision (`p` near `q`) and recall (`q` near `p`) at threshold `tau`.
pub fn f_score(p: &[Vec3], q: &[Vec3], tau: f64) -> Result<f64> {
    non_empty(p, q)?;
    if !(tau > 0.0) {
        return Err(Error::config("tau", "must be positive"));
    }
    let (tp, tq) = (KdTree::build(p), KdTree::build(q));
    Ok(f_score_from(&nearest_distances(p, &tq), &nearest_distances(q, &tp), tau))
}

fn f_score_from(p_to_q: &[f64], q_to_p: &[f64], tau: f64) -> f64 {
    let frac = |d: &[f64]| d.iter().filter(|&&x| x <= tau).count() as f64 / d.len() as f64;
    let (precision, recall) = (frac(p_to_q), frac(q_to_p));
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn directed_nc(from: &[Vec3], from_n: &[Vec3], to: &KdTree, to_n: &[Vec3]) -> f64 {
    let dots: Vec<f64> = from
        .par_iter()
        .zip(from_n)
        .map(|(p, n)| {
            let j = to.nearest(p).expect("non-empty").index;
            n.dot(&to_n[j]).abs()
        })
        .collect();
    mean(&dots)
}

/// Symmetric mean absolute cosine between nearest-neighbour matched normals.
pub fn normal_consistency(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    non_empty(&p.points, &q.points)?;
    let (pn, qn) = match (&p.normals, &q.normals) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingNormals),
    };
    let (tp, tq) = (KdTree::build(&p.points), KdTree::build(&q.points));
    Ok(nc_indexed(p, pn, &tp, q, qn, &tq))
}

fn nc_indexed(p: &PointCloud, pn: &[Vec3], tp: &KdTree, q: &PointCloud, qn: &[Vec3], tq: &KdTree) -> f64 {
    0.5 * (directed_nc(&p.points, pn, tq, qn) + directed_nc(&q.points, qn, tp, pn))
}

/// Mean normal consistency over interior edges, with the number of skipped
/// boundary or non-manifold edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshNormalConsistency {
    pub value: f64,
    pub scored_edges: usize,
    pub skipped_edges: usize,
}

/// Per interior edge `(v0, v1)` with opposite vertices `a` and `b`, scores
/// `1 - cos((v1 - v0) x (a - v0), (b - v0) x (v1 - v0))`.
pub fn mesh_normal_consistency(mesh: &TriangleMesh) -> Result<MeshNormalConsistency> {
    let mut total = 0.0;
    let mut scored = 0;
    let mut skipped = 0;
    for edge in mesh.edges() {
        if !edge.is_interior() {
            skipped += 1;
            continue;
        }
        let v0 = mesh.vertices[edge.v0 as usize];
        let v1 = mesh.vertices[edge.v1 as usize];
        let a = mesh.vertices[edge.incident[0].1 as usize];
        let b = mesh.vertices[edge.incident[1].1 as usize];
        let na = (v1 - v0).cross(&(a - v0));
        let nb = (b - v0).cross(&(v1 - v0));
        let denom = na.norm() * nb.norm();
        let cos = if denom > 0.0 { (na.dot(&nb) / denom).clamp(-1.0, 1.0) } else { 1.0 };
        total += 1.0 - cos;
        scored += 1;
    }
    if scored == 0 {
        return Err(Error::NoInteriorEdges);
    }
    Ok(MeshNormalConsistency {
        value: total / scored as f64,
        scored_edges: scored,
        skipped_edges: skipped,
    })
}

/// Volumetric IoU of the negative regions of two fields, from uniform samples.
pub fn iou(a: &impl ScalarField, b: &impl ScalarField, n: usize, cube: BoundingCube, seed: u64) -> f64 {
    let pts = uniform_in_cube(n.max(1), cube, seed);
    let va = a.eval_many(&pts);
    let vb = b.eval_many(&pts);
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in va.iter().zip(&vb) {
        let (ia, ib) = (*x < 0.0, *y < 0.0);
        inter += (ia && ib) as usize;
        union += (ia || ib) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Area-weighted uniform samples on the mesh with unit face normals.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut acc = 0.0;
    for f in 0..mesh.faces.len() {
        acc += mesh.face_area(f);
        cumulative.push(acc);
    }
    if mesh.is_empty() || !(acc > 0.0) {
        return Err(Error::ZeroArea);
    }
    let mut rng = substream(seed, &[tag::METRICS]);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * acc;
        let f = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let s = rng.random::<f64>().sqrt();
        let t = rng.random::<f64>();
        points.push(a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t));
        normals.push(mesh.face_cross(f).normalize());
    }
    PointCloud::with_normals(points, normals)
}

/// Reference samples lying on an analytic surface, with analytic normals.
///
/// Samples are drawn area-uniformly from a fine marching-cubes mesh and then
/// projected onto the exact zero level set.
pub fn analytic_surface_samples(sdf: &AnalyticSdf, n: usize, cube: BoundingCube, seed: u64) -> Result<PointCloud> {
    let grid = GridSpec::new(128, cube, 0.0)?;
    let mesh = marching_cubes(sdf, &grid).into_result()?;
    let approx = sample_mesh_surface(&mesh, n, seed)?;
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for p in approx.points {
        let q = project_to_surface(sdf, p).unwrap_or(p);
        points.push(q);
        normals.push(sdf.gradient(&q).normalize());
    }
    PointCloud::with_normals(points, normals)
}

/// Inside/outside test for a closed triangle mesh by ray parity.
///
/// Rays are cast along all three axes and the majority vote decides, which
/// absorbs the rare ray that grazes an edge or vertex.
pub struct MeshOccupancy {
    axes: [AxisBins; 3],
}

struct AxisBins {
    axis: usize,
    lo: [f64; 2],
    cell: [f64; 2],
    bins: Vec<Vec<u32>>,
    tris: Vec<[Vec3; 3]>,
}

const OCCUPANCY_BINS: usize = 64;

impl AxisBins {
    fn build(mesh: &TriangleMesh, axis: usize) -> Self {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let tris: Vec<[Vec3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.vertices {
            for (d, c) in [u, v].into_iter().enumerate() {
                lo[d] = lo[d].min(p[c]);
                hi[d] = hi[d].max(p[c]);
            }
        }
        let g = OCCUPANCY_BINS;
        let cell = [0, 1].map(|d| ((hi[d] - lo[d]) / g as f64).max(1e-12));
        let mut bins = vec![Vec::new(); g * g];
        for (t, tri) in tris.iter().enumerate() {
            let range = |d: usize, c: usize| {
                let mn = tri.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
                let mx = tri.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
                let i0 = (((mn - lo[d]) / cell[d]).floor() as isize).clamp(0, g as isize - 1) as usize;
                let i1 = (((mx - lo[d]) / cell[d]).floor() as isize).clamp(0, g as isize - 1) as usize;
                i0..=i1
            };
            for i in range(0, u) {
                for j in range(1, v) {
                    bins[i * g + j].push(t as u32);
                }
            }
        }
        Self {
            axis,
            lo,
            cell,
            bins,
            tris,
        }
    }

    fn inside(&self, q: &Vec3) -> bool {
        let (a, u, v) = (self.axis, (self.axis + 1) % 3, (self.axis + 2) % 3);
        let g = OCCUPANCY_BINS as isize;
        let i = ((q[u] - self.lo[0]) / self.cell[0]).floor() as isize;
        let j = ((q[v] - self.lo[1]) / self.cell[1]).floor() as isize;
        if i < 0 || j < 0 || i >= g || j >= g {
            return false;
        }
        let mut crossings = 0;
        for &t in &self.bins[(i * g + j) as usize] {
            let [p0, p1, p2] = self.tris[t as usize];
            let e = |s: &Vec3, t: &Vec3| (t[u] - s[u]) * (q[v] - s[v]) - (t[v] - s[v]) * (q[u] - s[u]);
            let (w0, w1, w2) = (e(&p1, &p2), e(&p2, &p0), e(&p0, &p1));
            let sum = w0 + w1 + w2;
            if sum == 0.0 {
                continue;
            }
            let all_pos = w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0;
            let all_neg = w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0;
            if !(all_pos || all_neg) {
                continue;
            }
            let hit = (w0 * p0[a] + w1 * p1[a] + w2 * p2[a]) / sum;
            if hit > q[a] {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }
}

impl MeshOccupancy {
    /// Fails with `EmptySurface` when the mesh has no faces.
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptySurface);
        }
        Ok(Self {
            axes: [0, 1, 2].map(|a| AxisBins::build(mesh, a)),
        })
    }

    pub fn contains(&self, q: &Vec3) -> bool {
        self.axes.iter().filter(|b| b.inside(q)).count() >= 2
    }
}

impl ScalarField for MeshOccupancy {
    /// -1 inside, +1 outside.
    fn eval(&self, q: &Vec3) -> f64 {
        if self.contains(q) {
            -1.0
        } else {
            1.0
        }
    }

    fn eval_many(&self, qs: &[Vec3]) -> Vec<f64> {
        qs.par_iter().map(|q| self.eval(q)).collect()
    }
}

/// Sampling parameters for [`MetricsReport::compare`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsConfig {
    pub n_samples: usize,
    pub iou_samples: usize,
    pub tau: f64,
    pub seed: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
            iou_samples: DEFAULT_IOU_SAMPLES,
            tau: DEFAULT_TAU,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub chamfer: f64,
    pub f_score: f64,
    pub tau: f64,
    pub nc: f64,
    pub mnc: f64,
    pub iou: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub mnc_skipped_edges: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl MetricsReport {
    /// Compares a reconstructed mesh against reference surface samples.
    /// `iou` is left empty; see [`iou`].
    pub fn compare(recon: &TriangleMesh, reference: &PointCloud, cfg: &MetricsConfig) -> Result<Self> {
        let ref_normals = reference.normals.as_deref().ok_or(Error::MissingNormals)?;
        let samples = sample_mesh_surface(recon, cfg.n_samples, cfg.seed)?;
        let sn = samples.normals.as_deref().expect("sampled with normals");
        non_empty(&samples.points, &reference.points)?;
        let (ts, tr) = (KdTree::build(&samples.points), KdTree::build(&reference.points));
        let s_to_r = nearest_distances(&samples.points, &tr);
        let r_to_s = nearest_distances(&reference.points, &ts);
        let mnc = mesh_normal_consistency(recon)?;
        Ok(Self {
            chamfer: mean(&s_to_r) + mean(&r_to_s),
            f_score: f_score_from(&s_to_r, &r_to_s, cfg.tau),
            tau: cfg.tau,
            nc: nc_indexed(&samples, sn, &ts, reference, ref_normals, &tr),
            mnc: mnc.value,
            iou: None,
            n_samples: cfg.n_samples,
            seed: cfg.seed,
            mnc_skipped_edges: mnc.skipped_edges,
            config_hash: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    fn brute_nearest(p: &Vec3, q: &[Vec3]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, x) in q.iter().enumerate() {
            let d = (p - x).norm_squared();
            if d < best.1 {
                best = (j, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    fn brute_chamfer(p: &[Vec3], q: &[Vec3]) -> f64 {
        let a: Vec<f64> = p.iter().map(|x| brute_nearest(x, q).1).collect();
        let b: Vec<f64> = q.iter().map(|x| brute_nearest(x, p).1).collect();
        a.iter().sum::<f64>() / a.len() as f64 + b.iter().sum::<f64>() / b.len() as f64
    }

    fn brute_f(p: &[Vec3], q: &[Vec3], tau: f64) -> f64 {
        let pr = p.iter().filter(|x| brute_nearest(x, q).1 <= tau).count() as f64 / p.len() as f64;
        let rc = q.iter().filter(|x| brute_nearest(x, p).1 <= tau).count() as f64 / q.len() as f64;
        if pr + rc == 0.0 {
            0.0
        } else {
            2.0 * pr * rc / (pr + rc)
        }
    }

    fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = substream(seed, &[]);
        (0..n)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()) * 0.2)
            .collect()
    }

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let pts = random_points(n, seed);
        let mut rng = substream(seed, &[1]);
        let normals = (0..n)
            .map(|_| Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5).normalize())
            .collect();
        PointCloud::with_normals(pts, normals).unwrap()
    }

    #[test]
    fn chamfer_small_cases() {
        let p = random_points(50, 1);
        assert_eq!(chamfer(&p, &p).unwrap(), 0.0);
        let a = [Vec3::zeros()];
        let b = [Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(chamfer(&a, &b).unwrap(), 2.0);
        assert!(matches!(chamfer(&a, &[]), Err(Error::EmptySet)));
    }

    #[test]
    fn f_score_small_cases() {
        let p = random_points(50, 2);
        assert_eq!(f_score(&p, &p, 0.02).unwrap(), 1.0);
        let a = [Vec3::zeros()];
        let b = [Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(f_score(&a, &b, 0.02).unwrap(), 0.0);
    }

    #[test]
    fn f_score_monotone_in_tau() {
        let (p, q) = (random_points(200, 3), random_points(150, 4));
        let vals: Vec<f64> = [0.01, 0.02, 0.04].iter().map(|&t| f_score(&p, &q, t).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
    }

    #[test]
    fn metrics_match_brute_force() {
        for seed in 0..50u64 {
            let n = 20 + (seed as usize * 37) % 480;
            let m = 10 + (seed as usize * 53) % 490;
            let (p, q) = (random_cloud(n, seed * 2 + 100), random_cloud(m, seed * 2 + 101));
            assert_eq!(chamfer(&p.points, &q.points).unwrap(), brute_chamfer(&p.points, &q.points));
            assert_eq!(f_score(&p.points, &q.points, 0.02).unwrap(), brute_f(&p.points, &q.points, 0.02));
            let dir = |a: &PointCloud, b: &PointCloud| {
                let (an, bn) = (a.normals.as_ref().unwrap(), b.normals.as_ref().unwrap());
                let s: f64 = a
                    .points
                    .iter()
                    .zip(an)
                    .map(|(x, n)| n.dot(&bn[brute_nearest(x, &b.points).0]).abs())
                    .sum();
                s / a.len() as f64
            };
            assert_eq!(normal_consistency(&p, &q).unwrap(), 0.5 * (dir(&p, &q) + dir(&q, &p)));
        }
    }

    #[test]
    fn normal_consistency_cases() {
        let p = random_cloud(100, 7);
        assert!((normal_consistency(&p, &p).unwrap() - 1.0).abs() < 1e-12);
        let flipped = PointCloud::with_normals(
            p.points.clone(),
            p.normals.as_ref().unwrap().iter().map(|n| -n).collect(),
        )
        .unwrap();
        assert!((normal_consistency(&p, &flipped).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            normal_consistency(&p, &PointCloud::new(p.points.clone())),
            Err(Error::MissingNormals)
        ));
    }

    #[test]
    fn tilted_patches() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let tilt = 60f64.to_radians();
        for i in 0..60 {
            for j in 0..60 {
                let (x, y) = (i as f64 / 60.0 - 0.5, j as f64 / 60.0 - 0.5);
                a.push(Vec3::new(x, y, 0.0));
                b.push(Vec3::new(x * tilt.cos(), y, x * tilt.sin()));
            }
        }
        let na = vec![Vec3::z(); a.len()];
        let nb = vec![Vec3::new(-tilt.sin(), 0.0, tilt.cos()); b.len()];
        let pa = PointCloud::with_normals(a, na).unwrap();
        let pb = PointCloud::with_normals(b, nb).unwrap();
        assert!((normal_consistency(&pa, &pb).unwrap() - 0.5).abs() < 0.01);
    }

    #[test]
    fn mnc_coplanar_pair() {
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let r = mesh_normal_consistency(&mesh).unwrap();
        assert!(r.value.abs() < 1e-9);
        assert_eq!(r.scored_edges, 1);
        assert_eq!(r.skipped_edges, 4);
    }

    #[test]
    fn mnc_cube_matches_per_edge_oracle() {
        let mesh = TriangleMesh::cube(0.5);
        // independent oracle: face normals from the face list, one pair per shared edge
        let normal = |f: &[u32; 3]| {
            let [a, b, c] = f.map(|i| mesh.vertices[i as usize]);
            (b - a).cross(&(c - a)).normalize()
        };
        let mut total = 0.0;
        let mut count = 0;
        for (i, fa) in mesh.faces.iter().enumerate() {
            for fb in &mesh.faces[i + 1..] {
                let shared = fa.iter().filter(|v| fb.contains(v)).count();
                if shared == 2 {
                    total += 1.0 - normal(fa).dot(&normal(fb));
                    count += 1;
                }
            }
        }
        assert_eq!(count, 18);
        let r = mesh_normal_consistency(&mesh).unwrap();
        assert_eq!(r.scored_edges, 18);
        assert!((r.value - total / count as f64).abs() < 1e-12);
        assert!((r.value - 12.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn mnc_needs_interior_edges() {
        let mesh = TriangleMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        assert!(matches!(mesh_normal_consistency(&mesh), Err(Error::NoInteriorEdges)));
    }

    #[test]
    fn mnc_marching_cubes_sphere_is_smooth() {
        let s = AnalyticSdf::sphere(Vec3::zeros(), 0.4);
        let mesh = marching_cubes(&s, &GridSpec::default()).mesh;
        assert!(mesh_normal_consistency(&mesh).unwrap().value < 0.01);
    }

    #[test]
    fn iou_cases() {
        let cube = BoundingCube::unit();
        let a = AnalyticSdf::sphere(Vec3::zeros(), 0.4);
        assert_eq!(iou(&a, &a, 1000, cube, 1), 1.0);
        let l = AnalyticSdf::sphere(Vec3::new(-0.25, 0.0, 0.0), 0.2);
        let r = AnalyticSdf::sphere(Vec3::new(0.25, 0.0, 0.0), 0.2);
        assert_eq!(iou(&l, &r, 10_000, cube, 2), 0.0);
        let b = AnalyticSdf::sphere(Vec3::zeros(), 0.3);
        assert!((iou(&a, &b, 100_000, cube, 3) - 0.421875).abs() < 0.01);
        let far = AnalyticSdf::sphere(Vec3::new(5.0, 0.0, 0.0), 0.1);
        assert_eq!(iou(&far, &far, 100, cube, 4), 1.0);
    }

    #[test]
    fn surface_samples_single_triangle() {
        let mesh = TriangleMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let s = sample_mesh_surface(&mesh, 2000, 5).unwrap();
        for p in &s.points {
            assert!(p.x >= 0.0 && p.y >= 0.0 && p.x + p.y <= 1.0 + 1e-12 && p.z == 0.0);
        }
        assert!(s.normals.unwrap().iter().all(|n| (n - Vec3::z()).norm() < 1e-12));
    }

    #[test]
    fn surface_samples_area_weighted() {
        // areas 1 and 3, separated along z
        let mesh = TriangleMesh::new(
            vec![
                Vec3::zeros(),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(3.0, 0.0, 1.0),
                Vec3::new(0.0, 2.0, 1.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let s = sample_mesh_surface(&mesh, 100_000, 6).unwrap();
        let upper = s.points.iter().filter(|p| p.z > 0.5).count() as f64 / 1e5;
        assert!((upper - 0.75).abs() < 0.01, "{upper}");
    }

    #[test]
    fn surface_samples_quad_centroid() {
        let mesh = TriangleMesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::new(1.0, 1.0, 0.0), Vec3::y()],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let s = sample_mesh_surface(&mesh, 10_000, 7).unwrap();
        let c = s.centroid().unwrap();
        assert!((c - Vec3::new(0.5, 0.5, 0.0)).norm() < 0.02);
    }

    #[test]
    fn surface_samples_zero_area() {
        let mesh = TriangleMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0], vec![[0, 1, 2]]).unwrap();
        assert!(matches!(sample_mesh_surface(&mesh, 10, 1), Err(Error::ZeroArea)));
    }

    #[test]
    fn mesh_occupancy_matches_sphere() {
        let s = AnalyticSdf::sphere(Vec3::zeros(), 0.4);
        let mesh = marching_cubes(&s, &GridSpec::default()).mesh;
        let occ = MeshOccupancy::new(&mesh).unwrap();
        let v = iou(&occ, &s, 20_000, BoundingCube::unit(), 8);
        assert!(v > 0.98, "{v}");
        let cube_mesh = TriangleMesh::cube(0.3);
        let cube_sdf = AnalyticSdf::cuboid(Vec3::zeros(), Vec3::repeat(0.3));
        let occ = MeshOccupancy::new(&cube_mesh).unwrap();
        assert!(iou(&occ, &cube_sdf, 20_000, BoundingCube::unit(), 9) > 0.999);
    }

    #[test]
    fn analytic_reference_lies_on_surface() {
        let t = AnalyticSdf::torus(Vec3::zeros(), 0.3, 0.1);
        let r = analytic_surface_samples(&t, 2000, BoundingCube::unit(), 1).unwrap();
        assert!(r.points.iter().all(|p| t.distance(p).abs() < 1e-6));
    }

    #[test]
    fn report_self_comparison() {
        let s = AnalyticSdf::sphere(Vec3::zeros(), 0.4);
        let mesh = marching_cubes(&s, &GridSpec::default()).mesh;
        let reference = analytic_surface_samples(&s, 10_000, BoundingCube::unit(), 2).unwrap();
        let report = MetricsReport::compare(&mesh, &reference, &MetricsConfig::default()).unwrap();
        assert!(report.chamfer < 0.02, "{report:?}");
        assert!(report.f_score > 0.98);
        assert!(report.nc > 0.99);
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        for key in ["chamfer", "f_score", "tau", "nc", "mnc", "iou", "n_samples", "seed"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    fn cloud_strategy() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..60)
    }

    fn to_points(v: &[(f64, f64, f64)]) -> Vec<Vec3> {
        v.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect()
    }

    proptest! {
        #[test]
        fn chamfer_and_f_are_symmetric(a in cloud_strategy(), b in cloud_strategy(), tau in 0.01..0.5f64) {
            let (p, q) = (to_points(&a), to_points(&b));
            prop_assert_eq!(chamfer(&p, &q).unwrap(), chamfer(&q, &p).unwrap());
            prop_assert_eq!(f_score(&p, &q, tau).unwrap(), f_score(&q, &p, tau).unwrap());
        }

        #[test]
        fn ranges_hold(a in cloud_strategy(), b in cloud_strategy(), seed in 0u64..1000) {
            let (p, q) = (to_points(&a), to_points(&b));
            prop_assert!(chamfer(&p, &q).unwrap() >= 0.0);
            let f = f_score(&p, &q, 0.2).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            let pc = random_cloud(p.len(), seed);
            let qc = random_cloud(q.len(), seed + 1);
            let nc = normal_consistency(&pc, &qc).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&nc));
        }

        #[test]
        fn chamfer_scales_linearly(a in cloud_strategy(), b in cloud_strategy(), s in 0.1..10.0f64) {
            let (p, q) = (to_points(&a), to_points(&b));
            let (sp, sq): (Vec<Vec3>, Vec<Vec3>) = (p.iter().map(|x| x * s).collect(), q.iter().map(|x| x * s).collect());
            let c = chamfer(&p, &q).unwrap();
            prop_assert!((chamfer(&sp, &sq).unwrap() - s * c).abs() <= 1e-9 * (1.0 + s * c));
        }

        #[test]
        fn mnc_is_scale_invariant_and_bounded(r in 0.2..0.45f64, s in 0.1..10.0f64, res in 8usize..20) {
            let sphere = AnalyticSdf::sphere(Vec3::new(0.01, -0.02, 0.03), r);
            let mesh = marching_cubes(&sphere, &GridSpec::new(res, BoundingCube::unit(), 0.0).unwrap()).mesh;
            let scaled = TriangleMesh { vertices: mesh.vertices.iter().map(|v| v * s).collect(), faces: mesh.faces.clone() };
            let a = mesh_normal_consistency(&mesh).unwrap().value;
            let b = mesh_normal_consistency(&scaled).unwrap().value;
            prop_assert!((0.0..=2.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
