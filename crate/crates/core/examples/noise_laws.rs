//! Empirical moments of each corruption law at the same configured sigma.

use n2n_sdf::noise::{corrupt, make_pair, NoiseLaw};
use n2n_sdf::{PointCloud, Result, Vec3};

fn main() -> Result<()> {
    let origin = PointCloud::new(vec![Vec3::zeros(); 100_000]);
    let sigma = 0.01;
    println!("law        mean        std        (sigma = {sigma})");
    for law in NoiseLaw::ALL {
        let spec = law.with(sigma, 0.0)?;
        let noisy = corrupt(&origin, &spec, 7);
        let xs: Vec<f64> = noisy.points.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        println!("{:<10} {mean:+.2e}  {:.5}", law.name(), var.sqrt());
    }

    let biased = NoiseLaw::Gaussian.with(sigma, 0.02)?;
    let (a, b) = make_pair(&origin, &biased, 7);
    let mean_x = |c: &PointCloud| c.points.iter().map(|p| p.x).sum::<f64>() / c.len() as f64;
    println!("biased gaussian pair: mean x = {:.4} / {:.4}", mean_x(&a), mean_x(&b));
    Ok(())
}
