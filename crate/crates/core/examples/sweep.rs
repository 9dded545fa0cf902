//! A tiny noise-law sweep through the same code path as `n2n-sdf experiment`.

use n2n_sdf::experiment::{cmd_experiment, ExperimentConfig};
use n2n_sdf::Result;

fn main() -> Result<()> {
    let out = std::env::temp_dir().join("n2n-sdf-sweep");
    let text = format!(
        "noise_law = gaussian, laplace\n\
         mode = paired-noisy, single-noisy\n\
         epochs = 2\npairs_per_epoch = 2\nlr = 0.001\nwidth = 64\ndepth = 3\n\
         resolution = 48\nout_dir = {}\n",
        out.display()
    );
    let cfg = ExperimentConfig::parse(&text, None)?;
    let rows = cmd_experiment(&cfg, &mut |line| eprintln!("{line}"))?;
    for r in rows {
        println!("{:<9} {:<13} chamfer {:.4}  f-score {:.3}", r.noise_law, r.mode, r.chamfer, r.f_score);
    }
    println!("table: {}", out.join("results.csv").display());
    Ok(())
}
