//! Command implementations behind the `n2n-sdf` binary.
//!
//! Every command writes into the configured output directory and records the
//! config hash and seed in what it writes, either inline (checkpoint, OBJ,
//! JSON) or in `manifest.json` for formats without comments (XYZ, CSV).
//! Wall-clock time is only ever printed, never written.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{Cell, ExperimentConfig, OUT_DIR_ENV};

use crate::error::{Error, Result};
use crate::extract::marching_cubes;
use crate::field::{read_checkpoint, write_checkpoint, NeuralSdf};
use crate::geometry::{AnalyticSdf, PointCloud, TriangleMesh};
use crate::metrics::{analytic_surface_samples, iou, MeshOccupancy, MetricsReport};
use crate::noise::make_pair;
use crate::rng::{derive_seed, tag};
use crate::sampling::sample_surface;
use crate::trainer::{TrainRecord, Trainer};

pub const CLEAN_XYZ: &str = "clean.xyz";
pub const NOISY1_XYZ: &str = "noisy_1.xyz";
pub const NOISY2_XYZ: &str = "noisy_2.xyz";
pub const CHECKPOINT: &str = "model.ckpt";
pub const TRAIN_LOG: &str = "train.jsonl";
pub const MESH_OBJ: &str = "mesh.obj";
pub const METRICS_JSON: &str = "metrics.json";
pub const RESULTS_CSV: &str = "results.csv";
pub const MANIFEST: &str = "manifest.json";

/// Receives human-readable progress lines.
pub type Log<'a> = &'a mut dyn FnMut(&str);

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    seed: String,
    config: BTreeMap<&'a str, &'a str>,
    files: BTreeMap<String, String>,
}

/// Writes `manifest.json` listing `files` (relative to `dir`) with their SHA-256.
fn write_manifest(dir: &Path, command: &str, cfg: &ExperimentConfig, files: &[PathBuf]) -> Result<PathBuf> {
    let canonical = cfg.canonical_text();
    let config = canonical.lines().filter_map(|l| l.split_once('=')).collect();
    let mut listed = BTreeMap::new();
    for f in files {
        let name = f.strip_prefix(dir).unwrap_or(f).display().to_string();
        listed.insert(name, sha256_file(f)?);
    }
    let manifest = Manifest {
        command,
        config_hash: cfg.hash(),
        seed: cfg.get("seed").unwrap_or_default().to_string(),
        config,
        files: listed,
    };
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&path, &text)?;
    Ok(path)
}

/// The clean cloud a run with this cell would train on.
pub fn clean_cloud(cfg: &ExperimentConfig, cell: &Cell) -> Result<PointCloud> {
    let tc = cfg.train_config(cell)?;
    let sdf = cell.shape.sdf();
    sample_surface(&sdf, tc.cube, tc.n_points, derive_seed(cell.seed, &[tag::CLEAN]))
}

/// Writes the clean cloud and one noisy pair as XYZ files.
pub fn cmd_sample(cfg: &ExperimentConfig, log: Log) -> Result<Vec<PathBuf>> {
    let cell = cfg.cell()?;
    let tc = cfg.train_config(&cell)?;
    let clean = clean_cloud(cfg, &cell)?;
    let (a, b) = make_pair(&clean, &tc.noise, derive_seed(cell.seed, &[tag::PAIR, 0, 0]));
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let mut files = Vec::new();
    for (name, cloud) in [(CLEAN_XYZ, &clean), (NOISY1_XYZ, &a), (NOISY2_XYZ, &b)] {
        let path = dir.join(name);
        cloud.save_xyz(&path)?;
        log(&format!("wrote {} ({} points)", path.display(), cloud.len()));
        files.push(path);
    }
    files.push(write_manifest(&dir, "sample", cfg, &files)?);
    Ok(files)
}

fn checkpoint_meta(cfg: &ExperimentConfig, cell: &Cell, epochs_done: usize) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    meta.insert("config_hash".into(), cfg.hash());
    meta.insert("seed".into(), cell.seed.to_string());
    meta.insert("shape".into(), cell.shape.name().into());
    meta.insert("mode".into(), cell.mode.name().into());
    meta.insert("noise_law".into(), cell.noise_law.name().into());
    meta.insert("sigma".into(), format!("{:?}", cell.sigma));
    meta.insert("mu".into(), format!("{:?}", cell.mu));
    meta.insert("epochs_completed".into(), epochs_done.to_string());
    meta
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub record: TrainRecord,
}

/// Trains one field and writes its checkpoint and per-epoch JSONL log.
///
/// On divergence the last finite parameters are still written before the
/// error is returned.
pub fn cmd_train(cfg: &ExperimentConfig, log: Log) -> Result<TrainOutcome> {
    let cell = cfg.cell()?;
    let tc = cfg.train_config(&cell)?;
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    log(&format!(
        "training {} / {} / {} sigma={} seed={} for {} epochs ({} optimizer steps)",
        cell.shape,
        cell.mode,
        cell.noise_law.name(),
        cell.sigma,
        cell.seed,
        tc.epochs,
        tc.total_steps()
    ));
    let epochs = tc.epochs;
    let mut trainer = Trainer::new(tc)?;
    let mut failure = None;
    for epoch in 0..epochs {
        match trainer.train_epoch(epoch) {
            Ok(s) => log(&format!(
                "epoch {:>4}  loss {:.6e}  heldout {:.6e}  {:.1}s",
                s.epoch, s.mean_loss, s.heldout_mse, s.wall_time_s
            )),
            Err(e) => {
                log(&format!("{e}; keeping parameters from the end of epoch {}", epoch as i64 - 1));
                failure = Some(e);
                break;
            }
        }
    }
    let done = trainer.record().epochs.len();
    let ckpt = dir.join(CHECKPOINT);
    write_file(&ckpt, &write_checkpoint(trainer.field(), &checkpoint_meta(cfg, &cell, done)))?;
    let mut record = trainer.record().clone();
    record.checkpoint = Some(CHECKPOINT.into());
    let jsonl = dir.join(TRAIN_LOG);
    let extra = [("config_hash", cfg.hash()), ("seed", cell.seed.to_string())];
    write_file(&jsonl, &record.to_jsonl(&extra, false))?;
    write_manifest(&dir, "train", cfg, &[ckpt.clone(), jsonl.clone()])?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(TrainOutcome {
        checkpoint: ckpt,
        log: jsonl,
        record,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<(NeuralSdf, BTreeMap<String, String>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&text).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: Some(path.to_path_buf()),
            line,
            msg,
        },
        other => other,
    })
}

/// Extracts the zero level set of a checkpoint into an OBJ file.
pub fn cmd_reconstruct(
    cfg: &ExperimentConfig,
    checkpoint: Option<&Path>,
    output: Option<&Path>,
    log: Log,
) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    let ckpt = checkpoint.map_or_else(|| dir.join(CHECKPOINT), Path::to_path_buf);
    let (field, meta) = load_checkpoint(&ckpt)?;
    let grid = cfg.grid()?;
    let mesh = marching_cubes(&field, &grid).into_result()?;
    let out = output.map_or_else(|| dir.join(MESH_OBJ), Path::to_path_buf);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut comments = vec![
        "n2n-sdf reconstruction".to_string(),
        format!("config_hash {}", cfg.hash()),
        format!("seed {}", meta.get("seed").map_or_else(|| cfg.get("seed").unwrap_or_default(), String::as_str)),
        format!("resolution {}", grid.resolution()),
    ];
    if let Some(h) = meta.get("config_hash") {
        comments.push(format!("checkpoint_config_hash {h}"));
    }
    mesh.save_obj(&out, &comments)?;
    log(&format!(
        "wrote {} ({} vertices, {} faces)",
        out.display(),
        mesh.vertices.len(),
        mesh.faces.len()
    ));
    Ok(out)
}

/// What `eval` compares against the ground-truth shape.
#[derive(Clone, Debug)]
pub enum EvalInput {
    Mesh(PathBuf),
    Checkpoint(PathBuf),
}

/// Metrics of a reconstructed mesh against an analytic shape. When `field`
/// is given, IoU uses its sign; otherwise a watertight mesh is voxelized by
/// ray parity and a non-watertight mesh gets no IoU.
pub fn evaluate(
    cfg: &ExperimentConfig,
    mesh: &TriangleMesh,
    field: Option<&NeuralSdf>,
    sdf: &AnalyticSdf,
    seed: u64,
) -> Result<MetricsReport> {
    let mc = cfg.metrics(seed)?;
    let cube = cfg.cube()?;
    let reference = analytic_surface_samples(sdf, mc.n_samples, cube, derive_seed(seed, &[tag::METRICS]))?;
    let mut report = MetricsReport::compare(mesh, &reference, &mc)?;
    let iou_seed = derive_seed(seed, &[tag::METRICS, tag::UNIFORM]);
    report.iou = match field {
        Some(f) => Some(iou(f, sdf, mc.iou_samples, cube, iou_seed)),
        None if mesh.is_watertight() => {
            let occ = MeshOccupancy::new(mesh)?;
            Some(iou(&occ, sdf, mc.iou_samples, cube, iou_seed))
        }
        None => None,
    };
    report.config_hash = Some(cfg.hash());
    Ok(report)
}

/// Evaluates a mesh or checkpoint against the configured shape and writes
/// `metrics.json`.
pub fn cmd_eval(cfg: &ExperimentConfig, input: &EvalInput, log: Log) -> Result<MetricsReport> {
    let cell = cfg.cell()?;
    let sdf = cell.shape.sdf();
    let report = match input {
        EvalInput::Mesh(path) => {
            let mesh = TriangleMesh::load_obj(path)?;
            if !mesh.is_watertight() {
                log("mesh is not watertight; IoU omitted");
            }
            evaluate(cfg, &mesh, None, &sdf, cell.seed)?
        }
        EvalInput::Checkpoint(path) => {
            let (field, _) = load_checkpoint(path)?;
            let mesh = marching_cubes(&field, &cfg.grid()?).into_result()?;
            evaluate(cfg, &mesh, Some(&field), &sdf, cell.seed)?
        }
    };
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    let path = dir.join(METRICS_JSON);
    write_file(&path, &(report.to_json() + "\n"))?;
    log(&format!("wrote {}", path.display()));
    Ok(report)
}

/// Trains, extracts and evaluates one sweep cell.
pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<MetricsReport> {
    let tc = cfg.train_config(cell)?;
    let mut trainer = Trainer::new(tc)?;
    trainer.run()?;
    let field = trainer.field();
    let mesh = marching_cubes(field, &cfg.grid()?).into_result()?;
    evaluate(cfg, &mesh, Some(field), &cell.shape.sdf(), cell.seed)
}

/// One row of the sweep table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub shape: String,
    pub noise_law: String,
    pub sigma: f64,
    pub mu: f64,
    pub mode: String,
    pub chamfer: f64,
    pub f_score: f64,
    pub nc: f64,
    pub mnc: f64,
    pub iou: Option<f64>,
    pub seed: u64,
    pub epochs: usize,
}

impl ResultRow {
    fn new(cell: &Cell, epochs: usize, report: Option<&MetricsReport>) -> Self {
        let pick = |f: fn(&MetricsReport) -> f64| report.map_or(f64::NAN, f);
        Self {
            shape: cell.shape.name().into(),
            noise_law: cell.noise_law.name().into(),
            sigma: cell.sigma,
            mu: cell.mu,
            mode: cell.mode.name().into(),
            chamfer: pick(|r| r.chamfer),
            f_score: pick(|r| r.f_score),
            nc: pick(|r| r.nc),
            mnc: pick(|r| r.mnc),
            iou: report.and_then(|r| r.iou),
            seed: cell.seed,
            epochs,
        }
    }
}

/// Runs every sweep cell in order and writes `results.csv`. A cell that
/// diverges or extracts no surface gets `NaN` metrics and the sweep goes on.
pub fn cmd_experiment(cfg: &ExperimentConfig, log: Log) -> Result<Vec<ResultRow>> {
    let cells = cfg.cells()?;
    for cell in &cells {
        cfg.train_config(cell)?;
    }
    cfg.grid()?;
    cfg.metrics(0)?;
    let dir = cfg.out_dir();
    create_dir(&dir)?;
    log(&format!("sweep of {} cells", cells.len()));
    let epochs = cfg.train_config(&cells[0])?.epochs;
    let mut rows = Vec::with_capacity(cells.len());
    for (i, cell) in cells.iter().enumerate() {
        let report = match run_cell(cfg, cell) {
            Ok(r) => Some(r),
            Err(e @ (Error::TrainingDiverged { .. } | Error::EmptySurface)) => {
                log(&format!("cell {}: {e}", i + 1));
                None
            }
            Err(e) => return Err(e),
        };
        let row = ResultRow::new(cell, epochs, report.as_ref());
        log(&format!(
            "[{}/{}] {} {} sigma={} mu={} {} seed={}: chamfer {:.6} f {:.4}",
            i + 1,
            cells.len(),
            row.shape,
            row.noise_law,
            row.sigma,
            row.mu,
            row.mode,
            row.seed,
            row.chamfer,
            row.f_score
        ));
        rows.push(row);
    }
    let path = dir.join(RESULTS_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for row in &rows {
        w.serialize(row).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_manifest(&dir, "experiment", cfg, &[path])?;
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::parse(
            "n_points = 128\nn_uniform = 128\nepochs = 1\npairs_per_epoch = 1\nbatch_size = 128\n\
             width = 16\ndepth = 2\nencoding_levels = 2\nresolution = 16\nn_samples = 500\niou_samples = 1000\n",
            None,
        )
        .unwrap();
        cfg.set("out_dir", dir.to_str().unwrap()).unwrap();
        cfg
    }

    #[test]
    fn sample_writes_three_clouds() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.set("n_points", "2048").unwrap();
        let files = cmd_sample(&cfg, &mut |_| {}).unwrap();
        assert_eq!(files.len(), 4);
        for f in &files[..3] {
            assert_eq!(fs::read_to_string(f).unwrap().lines().count(), 2048);
        }
        let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files[3]).unwrap()).unwrap();
        assert_eq!(manifest["config_hash"], cfg.hash());
    }

    #[test]
    fn zero_sigma_pair_equals_clean() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(dir.path());
        cfg.set("sigma", "0").unwrap();
        cmd_sample(&cfg, &mut |_| {}).unwrap();
        let read = |n: &str| PointCloud::load_xyz(dir.path().join(n)).unwrap().points;
        assert_eq!(read(CLEAN_XYZ), read(NOISY1_XYZ));
        assert_eq!(read(CLEAN_XYZ), read(NOISY2_XYZ));
    }

    #[test]
    fn train_then_reconstruct_then_eval() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let out = cmd_train(&cfg, &mut |_| {}).unwrap();
        assert_eq!(out.record.epochs.len(), 1);
        let (_, meta) = load_checkpoint(&out.checkpoint).unwrap();
        assert_eq!(meta["config_hash"], cfg.hash());
        assert_eq!(meta["mode"], "paired-noisy");
        match cmd_reconstruct(&cfg, None, None, &mut |_| {}) {
            Ok(obj) => {
                let text = fs::read_to_string(obj).unwrap();
                assert!(text.contains(&cfg.hash()));
                let r = cmd_eval(&cfg, &EvalInput::Mesh(dir.path().join(MESH_OBJ)), &mut |_| {}).unwrap();
                assert!(r.chamfer >= 0.0);
            }
            Err(e) => assert!(matches!(e, Error::EmptySurface)),
        }
    }

    #[test]
    fn missing_mesh_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path());
        let err = cmd_eval(&cfg, &EvalInput::Mesh(dir.path().join("nope.obj")), &mut |_| {}).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 1);
    }
}
