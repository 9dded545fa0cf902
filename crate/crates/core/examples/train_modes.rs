//! Short fits of the three supervision modes on a noisy sphere.

use n2n_sdf::field::Architecture;
use n2n_sdf::noise::NoiseSpec;
use n2n_sdf::trainer::{run_training, SupervisionMode, TrainConfig};
use n2n_sdf::Result;

fn main() -> Result<()> {
    for mode in SupervisionMode::ALL {
        let cfg = TrainConfig {
            mode,
            noise: NoiseSpec::gaussian(0.01),
            epochs: 3,
            pairs_per_epoch: 2,
            lr: 1e-3,
            architecture: Architecture {
                hidden: vec![64; 3],
                ..Architecture::default()
            },
            ..TrainConfig::default()
        };
        let (_, record) = run_training(&cfg)?;
        for e in &record.epochs {
            println!("{mode:<13} epoch {}  loss {:.3e}  held-out mse {:.3e}", e.epoch, e.mean_loss, e.heldout_mse);
        }
    }
    Ok(())
}
