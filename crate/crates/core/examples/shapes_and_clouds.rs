//! Samples the built-in shapes and writes each clean cloud as XYZ.

use n2n_sdf::geometry::ShapeId;
use n2n_sdf::sampling::sample_surface;
use n2n_sdf::{BoundingCube, Result, ScalarField, Vec3};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("n2n-sdf-shapes");
    std::fs::create_dir_all(&dir).map_err(|e| n2n_sdf::Error::Io { path: dir.clone(), source: e })?;
    for shape in ShapeId::ALL {
        let sdf = shape.sdf();
        let cloud = sample_surface(&sdf, BoundingCube::unit(), 2048, 1)?;
        let worst = cloud.points.iter().map(|p| sdf.eval(p).abs()).fold(0.0, f64::max);
        let path = dir.join(format!("{shape}.xyz"));
        cloud.save_xyz(&path)?;
        println!(
            "{shape:>6}: sdf(origin) = {:+.3}, max |sdf| on samples = {worst:.1e}, wrote {}",
            sdf.eval(&Vec3::zeros()),
            path.display()
        );
    }
    Ok(())
}
