use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use n2n_sdf::experiment::{self, EvalInput, ExperimentConfig};
use n2n_sdf::Result;

/// Denoised neural signed-distance fields from paired noisy point clouds.
#[derive(Parser)]
#[command(name = "n2n-sdf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` and N2N_SDF_OUT).
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    noise_law: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    resolution: Option<String>,
    /// Any config key, repeatable: `--set lr=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("seed", &self.seed),
            ("shape", &self.shape),
            ("noise_law", &self.noise_law),
            ("sigma", &self.sigma),
            ("mu", &self.mu),
            ("mode", &self.mode),
            ("epochs", &self.epochs),
            ("resolution", &self.resolution),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        if let Some(out) = &self.out {
            cfg.set("out_dir", &out.to_string_lossy())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a clean cloud and one noisy pair as XYZ files.
    Sample(Common),
    /// Fit a field and write its checkpoint and training log.
    Train(Common),
    /// Extract a mesh from a checkpoint.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Defaults to `<out>/model.ckpt`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to `<out>/mesh.obj`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a mesh or checkpoint against the configured shape.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
        mesh: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run a sweep and write a CSV table.
    Experiment(Common),
}

fn run(cli: Cli) -> Result<()> {
    let mut log = |line: &str| eprintln!("{line}");
    match cli.command {
        Command::Sample(c) => {
            experiment::cmd_sample(&c.resolve()?, &mut log)?;
        }
        Command::Train(c) => {
            let out = experiment::cmd_train(&c.resolve()?, &mut log)?;
            println!("{}", out.checkpoint.display());
        }
        Command::Reconstruct {
            common,
            checkpoint,
            output,
        } => {
            let path = experiment::cmd_reconstruct(&common.resolve()?, checkpoint.as_deref(), output.as_deref(), &mut log)?;
            println!("{}", path.display());
        }
        Command::Eval {
            common,
            mesh,
            checkpoint,
        } => {
            let input = match (mesh, checkpoint) {
                (Some(m), _) => EvalInput::Mesh(m),
                (None, Some(c)) => EvalInput::Checkpoint(c),
                (None, None) => unreachable!("clap requires one input"),
            };
            let report = experiment::cmd_eval(&common.resolve()?, &input, &mut log)?;
            println!("{}", report.to_json());
        }
        Command::Experiment(c) => {
            experiment::cmd_experiment(&c.resolve()?, &mut log)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
