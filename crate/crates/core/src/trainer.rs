//! Per-shape fitting of a [`NeuralSdf`] to frozen signed-distance targets.
//!
//! Three supervision modes share one loop and one random schedule:
//!
//! - [`SupervisionMode::PairedNoisy`]: every iteration draws a fresh pair of
//!   corrupted clouds; queries come from both members plus uniform volume
//!   samples, targets from the plane-fit estimator on the second member.
//! - [`SupervisionMode::CleanOracle`]: same queries, analytic targets.
//! - [`SupervisionMode::SingleNoisy`]: one corrupted cloud drawn once per run
//!   supplies both the near-surface queries and the targets.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AdamW, Architecture, NeuralSdf, OptimizerState};
use crate::geometry::{AnalyticSdf, BoundingCube, PointCloud, ScalarField, ShapeId, Vec3};
use crate::noise::{corrupt, make_pair, NoiseSpec};
use crate::rng::{derive_seed, substream, tag};
use crate::sampling::{build_query_batch, sample_surface, uniform_in_cube};
use crate::target::{NearestPlaneSdf, DEFAULT_K};

pub const HELDOUT_UNIFORM: usize = 8192;
pub const HELDOUT_SURFACE: usize = 2048;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupervisionMode {
    #[default]
    PairedNoisy,
    CleanOracle,
    SingleNoisy,
}

impl SupervisionMode {
    pub const ALL: [SupervisionMode; 3] = [Self::PairedNoisy, Self::CleanOracle, Self::SingleNoisy];

    pub fn name(&self) -> &'static str {
        match self {
            Self::PairedNoisy => "paired-noisy",
            Self::CleanOracle => "clean-oracle",
            Self::SingleNoisy => "single-noisy",
        }
    }
}

impl fmt::Display for SupervisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SupervisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "paired-noisy" | "paired" | "n2n" => Ok(Self::PairedNoisy),
            "clean-oracle" | "clean" => Ok(Self::CleanOracle),
            "single-noisy" | "single" => Ok(Self::SingleNoisy),
            _ => Err(Error::config("mode", format!("unknown supervision mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub shape: ShapeId,
    pub noise: NoiseSpec,
    pub n_points: usize,
    pub n_uniform: usize,
    pub epochs: usize,
    pub pairs_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub mode: SupervisionMode,
    pub architecture: Architecture,
    pub k: usize,
    pub cube: BoundingCube,
    /// Query from the second pair member and build targets from the first.
    pub swap_roles: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            shape: ShapeId::Sphere,
            noise: NoiseSpec::gaussian(0.01),
            n_points: 2048,
            n_uniform: 4096,
            epochs: 20,
            pairs_per_epoch: 10,
            batch_size: 512,
            lr: 1e-4,
            weight_decay: 1e-4,
            seed: 0,
            mode: SupervisionMode::PairedNoisy,
            architecture: Architecture::default(),
            k: DEFAULT_K,
            cube: BoundingCube::unit(),
            swap_roles: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_points", self.n_points),
            ("pairs_per_epoch", self.pairs_per_epoch),
            ("batch_size", self.batch_size),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::config(key, "must be >= 1"));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be non-negative"));
        }
        if self.k < 3 || self.k > self.n_points {
            return Err(Error::config("k", format!("must be in 3..={}", self.n_points)));
        }
        if self.architecture.hidden.iter().any(|&w| w == 0) {
            return Err(Error::config("hidden", "layer widths must be >= 1"));
        }
        Ok(())
    }

    /// Near-surface plus uniform queries drawn per pair.
    pub fn queries_per_pair(&self) -> usize {
        2 * self.n_points + self.n_uniform
    }

    pub fn steps_per_pair(&self) -> usize {
        self.queries_per_pair().div_ceil(self.batch_size)
    }

    /// Optimizer steps in a full run.
    pub fn total_steps(&self) -> u64 {
        (self.epochs * self.pairs_per_epoch * self.steps_per_pair()) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub heldout_mse: f64,
    pub steps: u64,
    /// Excluded from serialized records unless requested.
    #[serde(default, skip_serializing)]
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainRecord {
    pub mode: SupervisionMode,
    pub epochs: Vec<EpochStats>,
    pub checkpoint: Option<String>,
}

impl TrainRecord {
    /// One JSON object per epoch. `extra` key/value pairs are added to every
    /// line; wall time is included only when `with_wall_time` is set.
    pub fn to_jsonl(&self, extra: &[(&str, String)], with_wall_time: bool) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            let mut obj = serde_json::Map::new();
            obj.insert("epoch".into(), e.epoch.into());
            obj.insert("mode".into(), self.mode.name().into());
            obj.insert("mean_loss".into(), e.mean_loss.into());
            obj.insert("heldout_mse".into(), e.heldout_mse.into());
            obj.insert("steps".into(), e.steps.into());
            if with_wall_time {
                obj.insert("wall_time_s".into(), e.wall_time_s.into());
            }
            if let Some(c) = &self.checkpoint {
                obj.insert("checkpoint".into(), c.clone().into());
            }
            for (k, v) in extra {
                obj.insert((*k).into(), v.clone().into());
            }
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }

    pub fn final_heldout_mse(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.heldout_mse)
    }
}

/// Fixed evaluation queries with analytic targets, never used for training.
#[derive(Clone, Debug)]
pub struct HeldOut {
    pub points: Vec<Vec3>,
    pub targets: Vec<f64>,
}

impl HeldOut {
    pub fn new(sdf: &AnalyticSdf, cube: BoundingCube, seed: u64) -> Result<Self> {
        let s = derive_seed(seed, &[tag::HELDOUT]);
        let mut points = uniform_in_cube(HELDOUT_UNIFORM, cube, s);
        points.extend(sample_surface(sdf, cube, HELDOUT_SURFACE, s)?.points);
        let targets = sdf.eval_many(&points);
        Ok(Self { points, targets })
    }

    pub fn mse(&self, field: &NeuralSdf) -> f64 {
        field.loss(&self.points, &self.targets)
    }
}

/// Training state for one run; see the module docs for the modes.
pub struct Trainer {
    cfg: TrainConfig,
    sdf: AnalyticSdf,
    anchors: Vec<Vec3>,
    clean: PointCloud,
    single: Option<(PointCloud, NearestPlaneSdf)>,
    heldout: HeldOut,
    field: NeuralSdf,
    optimizer: OptimizerState,
    record: TrainRecord,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let sdf = cfg.shape.sdf();
        let anchors = sdf.orientation_anchors();
        let clean = sample_surface(&sdf, cfg.cube, cfg.n_points, derive_seed(cfg.seed, &[tag::CLEAN]))?;
        let clean = PointCloud::new(clean.points);
        let single = if cfg.mode == SupervisionMode::SingleNoisy {
            let cloud = corrupt(&clean, &cfg.noise, derive_seed(cfg.seed, &[tag::SINGLE]));
            let target = Self::target_for(&cfg, &anchors, &cloud)?;
            Some((cloud, target))
        } else {
            None
        };
        let heldout = HeldOut::new(&sdf, cfg.cube, cfg.seed)?;
        let field = NeuralSdf::new(&cfg.architecture, derive_seed(cfg.seed, &[tag::INIT]));
        let hyper = AdamW {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamW::default()
        };
        let optimizer = OptimizerState::new(&field, hyper);
        Ok(Self {
            record: TrainRecord {
                mode: cfg.mode,
                ..TrainRecord::default()
            },
            cfg,
            sdf,
            anchors,
            clean,
            single,
            heldout,
            field,
            optimizer,
        })
    }

    fn target_for(cfg: &TrainConfig, anchors: &[Vec3], cloud: &PointCloud) -> Result<NearestPlaneSdf> {
        Ok(NearestPlaneSdf::build(cloud, cfg.k)?
            .with_anchors(anchors.to_vec())
            .with_clamp(cfg.cube))
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn field(&self) -> &NeuralSdf {
        &self.field
    }

    pub fn into_field(self) -> NeuralSdf {
        self.field
    }

    pub fn record(&self) -> &TrainRecord {
        &self.record
    }

    pub fn clean_cloud(&self) -> &PointCloud {
        &self.clean
    }

    pub fn heldout(&self) -> &HeldOut {
        &self.heldout
    }

    pub fn steps_taken(&self) -> u64 {
        self.optimizer.step_count()
    }

    /// Queries and targets for pair `pair` of epoch `epoch`.
    pub fn supervision(&self, epoch: usize, pair: usize) -> Result<(Vec<Vec3>, Vec<f64>)> {
        let cfg = &self.cfg;
        let (e, p) = (epoch as u64, pair as u64);
        let uniform_seed = derive_seed(cfg.seed, &[tag::UNIFORM, e, p]);
        if let Some((cloud, target)) = &self.single {
            let batch = build_query_batch(cloud, cloud, cfg.n_uniform, cfg.cube, uniform_seed)?;
            let targets = target.eval_many(&batch.points);
            return Ok((batch.points, targets));
        }
        let (a, b) = make_pair(&self.clean, &cfg.noise, derive_seed(cfg.seed, &[tag::PAIR, e, p]));
        let (query_src, target_src) = if cfg.swap_roles { (b, a) } else { (a, b) };
        let batch = build_query_batch(&query_src, &target_src, cfg.n_uniform, cfg.cube, uniform_seed)?;
        let targets = match cfg.mode {
            SupervisionMode::CleanOracle => self.sdf.eval_many(&batch.points),
            _ => Self::target_for(cfg, &self.anchors, &target_src)?.eval_many(&batch.points),
        };
        Ok((batch.points, targets))
    }

    /// Runs one epoch. On divergence the parameters and optimizer state are
    /// rolled back to the start of the epoch and the error is returned.
    pub fn train_epoch(&mut self, epoch: usize) -> Result<EpochStats> {
        let start = Instant::now();
        let snapshot = (self.field.clone(), self.optimizer.clone());
        match self.run_epoch(epoch) {
            Ok(mean_loss) => {
                let stats = EpochStats {
                    epoch,
                    mean_loss,
                    heldout_mse: self.heldout.mse(&self.field),
                    steps: self.optimizer.step_count(),
                    wall_time_s: start.elapsed().as_secs_f64(),
                };
                self.record.epochs.push(stats.clone());
                Ok(stats)
            }
            Err(e) => {
                self.field = snapshot.0;
                self.optimizer = snapshot.1;
                Err(e)
            }
        }
    }

    fn run_epoch(&mut self, epoch: usize) -> Result<f64> {
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut order = Vec::new();
        let mut qs = Vec::with_capacity(self.cfg.batch_size);
        let mut ts = Vec::with_capacity(self.cfg.batch_size);
        for pair in 0..self.cfg.pairs_per_epoch {
            let (points, targets) = self.supervision(epoch, pair)?;
            order.clear();
            order.extend(0..points.len());
            let mut rng = substream(self.cfg.seed, &[tag::SHUFFLE, epoch as u64, pair as u64]);
            order.shuffle(&mut rng);
            for chunk in order.chunks(self.cfg.batch_size) {
                qs.clear();
                ts.clear();
                qs.extend(chunk.iter().map(|&i| points[i]));
                ts.extend(chunk.iter().map(|&i| targets[i]));
                let diverged = || Error::TrainingDiverged {
                    epoch,
                    step: self.optimizer.step_count(),
                };
                let (loss, grad) = self.field.loss_and_gradient(&qs, &ts).map_err(|_| diverged())?;
                if !loss.is_finite() || !grad.is_finite() {
                    return Err(diverged());
                }
                let step = self.optimizer.step_count();
                self.optimizer.step(&mut self.field, &grad)?;
                if !self.field.is_finite() {
                    return Err(Error::TrainingDiverged { epoch, step });
                }
                loss_sum += loss;
                batches += 1;
            }
        }
        Ok(loss_sum / batches as f64)
    }

    /// Trains for the configured number of epochs.
    pub fn run(&mut self) -> Result<()> {
        for epoch in self.record.epochs.len()..self.cfg.epochs {
            self.train_epoch(epoch)?;
        }
        Ok(())
    }
}

/// Trains from scratch; returns the field and its record.
pub fn run_training(cfg: &TrainConfig) -> Result<(NeuralSdf, TrainRecord)> {
    let mut trainer = Trainer::new(cfg.clone())?;
    trainer.run()?;
    let record = trainer.record.clone();
    Ok((trainer.into_field(), record))
}
