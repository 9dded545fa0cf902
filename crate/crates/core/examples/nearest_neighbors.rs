//! k-nearest-neighbour queries against the exact k-d tree.

use n2n_sdf::geometry::ShapeId;
use n2n_sdf::kdtree::KdTree;
use n2n_sdf::sampling::sample_surface;
use n2n_sdf::{BoundingCube, Result, Vec3};

fn main() -> Result<()> {
    let cloud = sample_surface(&ShapeId::Torus.sdf(), BoundingCube::unit(), 4096, 3)?;
    let tree = KdTree::build(&cloud.points);
    let q = Vec3::new(0.3, 0.0, 0.15);
    for n in tree.knn(&q, 5) {
        let p = cloud.points[n.index];
        println!("#{:<5} at ({:+.3}, {:+.3}, {:+.3})  distance {:.4}", n.index, p.x, p.y, p.z, n.dist());
    }
    Ok(())
}
