//! Scores a slightly inflated sphere mesh against the exact sphere.

use n2n_sdf::extract::{marching_cubes, GridSpec};
use n2n_sdf::geometry::AnalyticSdf;
use n2n_sdf::metrics::{analytic_surface_samples, iou, MetricsConfig, MetricsReport};
use n2n_sdf::{BoundingCube, Result, Vec3};

fn main() -> Result<()> {
    let truth = AnalyticSdf::sphere(Vec3::zeros(), 0.4);
    let cube = BoundingCube::unit();
    let reference = analytic_surface_samples(&truth, 10_000, cube, 1)?;
    for radius in [0.4, 0.41, 0.43] {
        let guess = AnalyticSdf::sphere(Vec3::zeros(), radius);
        let mesh = marching_cubes(&guess, &GridSpec::default()).into_result()?;
        let mut report = MetricsReport::compare(&mesh, &reference, &MetricsConfig::default())?;
        report.iou = Some(iou(&guess, &truth, 100_000, cube, 2));
        println!(
            "r = {radius:.2}: chamfer {:.4}  f-score {:.3}  nc {:.4}  mnc {:.4}  iou {:.3}",
            report.chamfer,
            report.f_score,
            report.nc,
            report.mnc,
            report.iou.unwrap()
        );
    }
    Ok(())
}
