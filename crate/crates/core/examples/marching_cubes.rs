//! Extracts the built-in shapes and writes them as OBJ.

use n2n_sdf::extract::{marching_cubes, GridSpec};
use n2n_sdf::geometry::ShapeId;
use n2n_sdf::{BoundingCube, Result};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("n2n-sdf-meshes");
    std::fs::create_dir_all(&dir).map_err(|e| n2n_sdf::Error::Io { path: dir.clone(), source: e })?;
    let grid = GridSpec::new(64, BoundingCube::unit(), 0.0)?;
    for shape in ShapeId::ALL {
        let mesh = marching_cubes(&shape.sdf(), &grid).into_result()?;
        let path = dir.join(format!("{shape}.obj"));
        mesh.save_obj(&path, &[format!("{shape} at resolution {}", grid.resolution())])?;
        println!(
            "{shape:>6}: {} vertices, {} faces, area {:.4}, watertight {}",
            mesh.vertices.len(),
            mesh.faces.len(),
            mesh.area(),
            mesh.is_watertight()
        );
    }
    Ok(())
}
