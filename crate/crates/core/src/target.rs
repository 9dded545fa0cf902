//! Frozen point-to-SDF estimator: signed distance to a local PCA plane.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundingCube, PointCloud, ScalarField, Vec3};
use crate::kdtree::KdTree;

pub const DEFAULT_K: usize = 16;
/// A neighbourhood whose middle covariance eigenvalue falls below this
/// fraction of the largest is treated as rank < 2 (no plane).
const RANK_TOL: f64 = 1e-10;

/// Signed distance from a query to the plane fitted through its `k` nearest
/// cloud points. Immutable after construction.
#[derive(Clone, Debug)]
pub struct NearestPlaneSdf {
    tree: KdTree,
    k: usize,
    anchors: Vec<Vec3>,
    anchor_tree: KdTree,
    clamp: f64,
}

/// A fitted local plane: centroid and the normal oriented away from the anchor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalPlane {
    pub centroid: Vec3,
    pub normal: Vec3,
}

impl NearestPlaneSdf {
    /// Indexes `cloud`; normals are oriented away from the cloud centroid and
    /// values clamped to the diagonal of the unit cube.
    pub fn build(cloud: &PointCloud, k: usize) -> Result<Self> {
        if k < 3 || cloud.len() < k {
            return Err(Error::TooFewPoints {
                needed: k.max(3),
                got: cloud.len(),
            });
        }
        let centroid = cloud.centroid().expect("non-empty");
        Ok(Self {
            tree: KdTree::build(&cloud.points),
            k,
            anchors: vec![centroid],
            anchor_tree: KdTree::build(&[centroid]),
            clamp: BoundingCube::unit().diagonal(),
        })
    }

    /// Replaces the orientation anchor with a set of skeleton points; each
    /// plane is oriented away from the anchor nearest its centroid.
    pub fn with_anchors(mut self, anchors: Vec<Vec3>) -> Self {
        if !anchors.is_empty() {
            self.anchor_tree = KdTree::build(&anchors);
            self.anchors = anchors;
        }
        self
    }

    pub fn with_clamp(mut self, cube: BoundingCube) -> Self {
        self.clamp = cube.diagonal();
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn anchors(&self) -> &[Vec3] {
        &self.anchors
    }

    fn anchor_for(&self, p: &Vec3) -> Vec3 {
        let n = self.anchor_tree.nearest(p).expect("at least one anchor");
        self.anchors[n.index]
    }

    /// The oriented plane for `q`, or `None` for a degenerate neighbourhood.
    pub fn local_plane(&self, q: &Vec3) -> Option<LocalPlane> {
        let pts = self.tree.points();
        let nbrs = self.tree.knn(q, self.k);
        let inv = 1.0 / nbrs.len() as f64;
        let centroid: Vec3 = nbrs.iter().map(|n| pts[n.index]).sum::<Vec3>() * inv;
        let mut cov = Matrix3::zeros();
        for n in &nbrs {
            let d = pts[n.index] - centroid;
            cov += d * d.transpose();
        }
        cov *= inv;
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let largest = eig.eigenvalues[order[2]];
        let middle = eig.eigenvalues[order[1]];
        if !(largest > 0.0) || middle <= RANK_TOL * largest {
            return None;
        }
        let mut normal: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
        normal /= normal.norm();
        if normal.dot(&(centroid - self.anchor_for(&centroid))) < 0.0 {
            normal = -normal;
        }
        Some(LocalPlane { centroid, normal })
    }

    pub fn eval_target(&self, q: &Vec3) -> f64 {
        let value = match self.local_plane(q) {
            Some(plane) => (q - plane.centroid).dot(&plane.normal),
            None => {
                // unsigned distance to the nearest point, signed by the anchor ray test
                let nn = self.tree.nearest(q).expect("non-empty tree");
                let p = self.tree.points()[nn.index];
                let anchor = self.anchor_for(&p);
                let d = nn.dist();
                if (q - anchor).norm() > (p - anchor).norm() {
                    d
                } else {
                    -d
                }
            }
        };
        value.clamp(-self.clamp, self.clamp)
    }
}

impl ScalarField for NearestPlaneSdf {
    fn eval(&self, q: &Vec3) -> f64 {
        self.eval_target(q)
    }

    fn eval_many(&self, qs: &[Vec3]) -> Vec<f64> {
        qs.par_iter().map(|q| self.eval_target(q)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnalyticSdf;
    use crate::noise::{corrupt, NoiseSpec};
    use crate::sampling::{sample_surface, uniform_in_cube};

    fn sphere_cloud(n: usize, seed: u64) -> PointCloud {
        let s = AnalyticSdf::sphere(Vec3::zeros(), 0.4);
        sample_surface(&s, BoundingCube::unit(), n, seed).unwrap()
    }

    fn plane_patch() -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..41 {
            for j in 0..41 {
                pts.push(Vec3::new(-0.2 + 0.01 * i as f64, -0.2 + 0.01 * j as f64, 0.1));
            }
        }
        PointCloud::new(pts)
    }

    #[test]
    fn construction_bounds() {
        let c = sphere_cloud(2048, 1);
        assert!(NearestPlaneSdf::build(&c, 16).is_ok());
        assert!(matches!(NearestPlaneSdf::build(&c, 2), Err(Error::TooFewPoints { .. })));
        let tiny = PointCloud::new(vec![Vec3::zeros(); 2]);
        assert!(matches!(NearestPlaneSdf::build(&tiny, 3), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn collinear_points_fall_back_to_point_distance() {
        let c = PointCloud::new(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.2, 0.0, 0.0)]);
        let t = NearestPlaneSdf::build(&c, 3).unwrap();
        assert!(t.local_plane(&Vec3::new(0.0, 0.3, 0.0)).is_none());
        // the anchor is the centroid (0.1, 0, 0); far along y is outside
        let v = t.eval_target(&Vec3::new(0.1, 0.3, 0.0));
        assert!((v - 0.3).abs() < 1e-12);
        let v = t.eval_target(&Vec3::new(0.1, 0.0, 0.0));
        assert_eq!(v, 0.0);
    }

    #[test]
    fn duplicates_are_accepted() {
        let mut c = sphere_cloud(256, 3);
        c.points.extend(c.points.clone());
        let t = NearestPlaneSdf::build(&c, 16).unwrap();
        assert!(t.eval_target(&Vec3::zeros()) < 0.0);
    }

    #[test]
    fn sphere_centre_is_inside() {
        let t = NearestPlaneSdf::build(&sphere_cloud(2048, 2), 16).unwrap();
        assert!(t.eval_target(&Vec3::zeros()) < 0.0);
    }

    #[test]
    fn plane_patch_height() {
        let cloud = plane_patch();
        // anchor below the patch so the normal points +z
        let t = NearestPlaneSdf::build(&cloud, 16).unwrap().with_anchors(vec![Vec3::new(0.0, 0.0, -1.0)]);
        for h in [0.05, 0.1, -0.03] {
            let v = t.eval_target(&Vec3::new(0.003, -0.004, 0.1 + h));
            assert!((v - h).abs() < 1e-3, "h {h} -> {v}");
        }
    }

    #[test]
    fn moving_along_normal_is_linear() {
        let cloud = plane_patch();
        let t = NearestPlaneSdf::build(&cloud, 16).unwrap().with_anchors(vec![Vec3::new(0.0, 0.0, -1.0)]);
        let q = Vec3::new(0.001, 0.002, 0.15);
        let plane = t.local_plane(&q).unwrap();
        let base = t.eval_target(&q);
        for delta in [1e-3, 5e-3, -2e-3] {
            let moved = t.eval_target(&(q + plane.normal * delta));
            assert!((moved - base - delta).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_evaluation_is_pure() {
        let t = NearestPlaneSdf::build(&sphere_cloud(1024, 4), 16).unwrap();
        let q = Vec3::new(0.1, 0.2, -0.3);
        let a = t.eval_target(&q);
        for _ in 0..5 {
            assert_eq!(t.eval_target(&q).to_bits(), a.to_bits());
        }
    }

    #[test]
    fn clean_convex_cloud_gets_signs_right() {
        for shape in [AnalyticSdf::sphere(Vec3::zeros(), 0.4), AnalyticSdf::cuboid(Vec3::zeros(), Vec3::repeat(0.3))] {
            let cloud = sample_surface(&shape, BoundingCube::unit(), 4096, 5).unwrap();
            let t = NearestPlaneSdf::build(&cloud, 16).unwrap();
            let qs = uniform_in_cube(5000, BoundingCube::unit(), 6);
            let agree = qs
                .iter()
                .filter(|q| t.eval_target(q).signum() == shape.distance(q).signum())
                .count();
            assert!(agree as f64 >= 0.99 * qs.len() as f64, "{shape:?}: {agree}");
        }
    }

    #[test]
    fn torus_needs_skeleton_anchors() {
        let torus = AnalyticSdf::torus(Vec3::zeros(), 0.3, 0.1);
        let cloud = sample_surface(&torus, BoundingCube::unit(), 4096, 7).unwrap();
        let t = NearestPlaneSdf::build(&cloud, 16).unwrap().with_anchors(torus.orientation_anchors());
        let qs = uniform_in_cube(5000, BoundingCube::unit(), 8);
        let agree = qs.iter().filter(|q| t.eval_target(q).signum() == torus.distance(q).signum()).count();
        assert!(agree as f64 >= 0.99 * qs.len() as f64, "{agree}");
    }

    #[test]
    fn noisy_targets_are_nearly_unbiased_on_surface() {
        // averaged over independent noisy clouds, the value at surface points is ~0
        let sphere = AnalyticSdf::sphere(Vec3::zeros(), 0.4);
        let clean = sample_surface(&sphere, BoundingCube::unit(), 2048, 9).unwrap();
        let queries: Vec<Vec3> = clean.points.iter().step_by(41).copied().take(50).collect();
        let trials = 200;
        let mut mean = vec![0.0; queries.len()];
        for s in 0..trials {
            let noisy = corrupt(&clean, &NoiseSpec::gaussian(0.01), 1000 + s);
            let t = NearestPlaneSdf::build(&noisy, 16).unwrap();
            for (m, q) in mean.iter_mut().zip(&queries) {
                *m += t.eval_target(q) / trials as f64;
            }
        }
        let bias = mean.iter().sum::<f64>() / mean.len() as f64;
        assert!(bias.abs() < 0.005, "bias {bias}");
    }

    #[test]
    fn values_are_clamped() {
        let t = NearestPlaneSdf::build(&plane_patch(), 16).unwrap();
        let v = t.eval_target(&Vec3::new(0.0, 0.0, 100.0));
        assert!(v.abs() <= BoundingCube::unit().diagonal());
    }
}
