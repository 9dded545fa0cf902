//! The frozen plane-fit target on noisy sphere clouds: per-cloud error and
//! its average over many independent clouds.

use n2n_sdf::geometry::ShapeId;
use n2n_sdf::noise::{corrupt, NoiseSpec};
use n2n_sdf::sampling::sample_surface;
use n2n_sdf::target::{NearestPlaneSdf, DEFAULT_K};
use n2n_sdf::{BoundingCube, Result, ScalarField, Vec3};

fn main() -> Result<()> {
    let sdf = ShapeId::Sphere.sdf();
    let clean = sample_surface(&sdf, BoundingCube::unit(), 2048, 1)?;
    let queries = [
        Vec3::new(0.4, 0.0, 0.0),
        Vec3::new(0.0, 0.45, 0.0),
        Vec3::new(0.0, 0.0, -0.3),
        Vec3::new(0.1, 0.1, 0.1),
    ];
    let noise = NoiseSpec::gaussian(0.01);
    let clouds = 100;
    let mut mean = [0.0; 4];
    for c in 0..clouds {
        let target = NearestPlaneSdf::build(&corrupt(&clean, &noise, c), DEFAULT_K)?;
        for (m, q) in mean.iter_mut().zip(&queries) {
            *m += target.eval(q) / clouds as f64;
        }
    }
    println!("query                    true      mean target over {clouds} clouds");
    for (q, m) in queries.iter().zip(mean) {
        println!("({:+.2}, {:+.2}, {:+.2})   {:+.4}   {m:+.4}", q.x, q.y, q.z, sdf.eval(q));
    }
    Ok(())
}
