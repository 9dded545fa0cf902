//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. The keys `shape`,
//! `noise_law`, `sigma`, `mu`, `mode` and `seed` accept comma-separated lists
//! for sweeps; every other key takes a single value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extract::GridSpec;
use crate::field::{Activation, Architecture};
use crate::geometry::{BoundingCube, ShapeId};
use crate::metrics::MetricsConfig;
use crate::noise::NoiseLaw;
use crate::trainer::{SupervisionMode, TrainConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "N2N_SDF_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Shape,
    Law,
    Float,
    Count,
    Seed,
    Mode,
    Activation,
    Bool,
    Path,
}

struct Key {
    name: &'static str,
    default: &'static str,
    kind: Kind,
    sweep: bool,
}

const fn key(name: &'static str, default: &'static str, kind: Kind, sweep: bool) -> Key {
    Key {
        name,
        default,
        kind,
        sweep,
    }
}

const KEYS: &[Key] = &[
    key("shape", "sphere", Kind::Shape, true),
    key("noise_law", "gaussian", Kind::Law, true),
    key("sigma", "0.01", Kind::Float, true),
    key("mu", "0", Kind::Float, true),
    key("mode", "paired-noisy", Kind::Mode, true),
    key("seed", "0", Kind::Seed, true),
    key("n_points", "2048", Kind::Count, false),
    key("n_uniform", "4096", Kind::Count, false),
    key("epochs", "20", Kind::Count, false),
    key("pairs_per_epoch", "10", Kind::Count, false),
    key("batch_size", "512", Kind::Count, false),
    key("lr", "0.0001", Kind::Float, false),
    key("weight_decay", "0.0001", Kind::Float, false),
    key("k", "16", Kind::Count, false),
    key("width", "128", Kind::Count, false),
    key("depth", "4", Kind::Count, false),
    key("encoding_levels", "6", Kind::Count, false),
    key("activation", "tanh", Kind::Activation, false),
    key("swap_roles", "false", Kind::Bool, false),
    key("half_extent", "0.5", Kind::Float, false),
    key("resolution", "64", Kind::Count, false),
    key("iso_value", "0", Kind::Float, false),
    key("n_samples", "10000", Kind::Count, false),
    key("iou_samples", "100000", Kind::Count, false),
    key("tau", "0.02", Kind::Float, false),
    key("out_dir", "", Kind::Path, false),
];

fn lookup(name: &str) -> Result<&'static Key> {
    KEYS.iter()
        .find(|k| k.name == name)
        .ok_or_else(|| Error::config(name, "unknown key"))
}

/// Canonical spelling of a single value, so equal settings hash equally.
fn canonical(key: &Key, raw: &str) -> Result<String> {
    let bad = |msg: String| Error::config(key.name, msg);
    let raw = raw.trim();
    Ok(match key.kind {
        Kind::Shape => raw.parse::<ShapeId>()?.name().to_string(),
        Kind::Law => raw.parse::<NoiseLaw>()?.name().to_string(),
        Kind::Mode => raw.parse::<SupervisionMode>()?.name().to_string(),
        Kind::Activation => raw.parse::<Activation>()?.name().to_string(),
        Kind::Float => {
            let v: f64 = raw.parse().map_err(|_| bad(format!("`{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(bad(format!("`{raw}` is not finite")));
            }
            format!("{v:?}")
        }
        Kind::Count => raw
            .parse::<usize>()
            .map_err(|_| bad(format!("`{raw}` is not a non-negative integer")))?
            .to_string(),
        Kind::Seed => raw
            .parse::<u64>()
            .map_err(|_| bad(format!("`{raw}` is not a 64-bit unsigned integer")))?
            .to_string(),
        Kind::Bool => match raw {
            "true" | "1" | "yes" => "true".into(),
            "false" | "0" | "no" => "false".into(),
            _ => return Err(bad(format!("`{raw}` is not a boolean"))),
        },
        Kind::Path => raw.to_string(),
    })
}

fn canonical_list(key: &Key, raw: &str) -> Result<String> {
    if key.kind == Kind::Path {
        return canonical(key, raw);
    }
    let items: Vec<&str> = raw.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(Error::config(key.name, "empty value"));
    }
    if items.len() > 1 && !key.sweep {
        return Err(Error::config(key.name, "does not accept a list"));
    }
    let parts = items.iter().map(|s| canonical(key, s)).collect::<Result<Vec<_>>>()?;
    Ok(parts.join(","))
}

/// Resolved configuration: every known key has a canonical value.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|k| (k.name, canonical(k, k.default).expect("valid default")))
                .collect(),
        }
    }
}

/// One point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub shape: ShapeId,
    pub noise_law: NoiseLaw,
    pub sigma: f64,
    pub mu: f64,
    pub mode: SupervisionMode,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.map(Path::to_path_buf),
                    line: i + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let k = k.trim();
            if seen.insert(k.to_string(), i + 1).is_some() {
                return Err(Error::config(k, "given more than once"));
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, Some(path))
    }

    /// Overrides one key; unknown keys and malformed values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec = lookup(key)?;
        let v = canonical_list(spec, value)?;
        self.values.insert(spec.name, v);
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(pair, "expected key=value"))?;
        self.set(k.trim(), v)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("known key")
    }

    fn list(&self, key: &str) -> Vec<&str> {
        self.raw(key).split(',').collect()
    }

    fn single(&self, key: &str) -> Result<&str> {
        let v = self.raw(key);
        if v.contains(',') {
            Err(Error::config(key, "expects a single value outside `experiment`"))
        } else {
            Ok(v)
        }
    }

    fn count(&self, key: &str) -> usize {
        self.raw(key).parse().expect("canonical count")
    }

    fn float(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("canonical float")
    }

    /// The hashed content: sorted `key=value` lines, output directory excluded.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            if *k != "out_dir" {
                let _ = writeln!(s, "{k}={v}");
            }
        }
        s
    }

    /// Hex SHA-256 of [`Self::canonical_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Explicit `out_dir`, else the environment variable, else `out`.
    pub fn out_dir(&self) -> PathBuf {
        match self.raw("out_dir") {
            "" => std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from),
            dir => PathBuf::from(dir),
        }
    }

    pub fn cube(&self) -> Result<BoundingCube> {
        BoundingCube::new(self.float("half_extent")).map_err(|e| Error::config("half_extent", e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.count("resolution"), self.cube()?, self.float("iso_value"))
    }

    pub fn metrics(&self, seed: u64) -> Result<MetricsConfig> {
        let cfg = MetricsConfig {
            n_samples: self.count("n_samples"),
            iou_samples: self.count("iou_samples"),
            tau: self.float("tau"),
            seed,
        };
        if cfg.n_samples == 0 {
            return Err(Error::config("n_samples", "must be >= 1"));
        }
        if cfg.iou_samples == 0 {
            return Err(Error::config("iou_samples", "must be >= 1"));
        }
        if !(cfg.tau > 0.0) {
            return Err(Error::config("tau", "must be positive"));
        }
        Ok(cfg)
    }

    /// The single cell described by this config.
    pub fn cell(&self) -> Result<Cell> {
        Ok(Cell {
            shape: self.single("shape")?.parse()?,
            noise_law: self.single("noise_law")?.parse()?,
            sigma: self.single("sigma")?.parse().expect("canonical"),
            mu: self.single("mu")?.parse().expect("canonical"),
            mode: self.single("mode")?.parse()?,
            seed: self.single("seed")?.parse().expect("canonical"),
        })
    }

    /// Sweep cells in the order shape, noise law, sigma, mu, mode, seed.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for shape in self.list("shape") {
            for law in self.list("noise_law") {
                for sigma in self.list("sigma") {
                    for mu in self.list("mu") {
                        for mode in self.list("mode") {
                            for seed in self.list("seed") {
                                out.push(Cell {
                                    shape: shape.parse()?,
                                    noise_law: law.parse()?,
                                    sigma: sigma.parse().expect("canonical"),
                                    mu: mu.parse().expect("canonical"),
                                    mode: mode.parse()?,
                                    seed: seed.parse().expect("canonical"),
                                });
                            }
                        }
                    }
                }
            }
        }
        for c in &out {
            c.noise_law.with(c.sigma, c.mu)?;
        }
        Ok(out)
    }

    /// Training settings for `cell`; everything else comes from this config.
    pub fn train_config(&self, cell: &Cell) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            shape: cell.shape,
            noise: cell.noise_law.with(cell.sigma, cell.mu)?,
            n_points: self.count("n_points"),
            n_uniform: self.count("n_uniform"),
            epochs: self.count("epochs"),
            pairs_per_epoch: self.count("pairs_per_epoch"),
            batch_size: self.count("batch_size"),
            lr: self.float("lr"),
            weight_decay: self.float("weight_decay"),
            seed: cell.seed,
            mode: cell.mode,
            architecture: Architecture {
                encoding_levels: self.count("encoding_levels"),
                hidden: vec![self.count("width"); self.count("depth")],
                activation: self.raw("activation").parse()?,
            },
            k: self.count("k"),
            cube: self.cube()?,
            swap_roles: self.raw("swap_roles") == "true",
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Documented keys with their defaults, for `--help` style listings.
    pub fn documented_keys() -> Vec<(&'static str, &'static str)> {
        KEYS.iter().map(|k| (k.name, k.default)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_training_defaults() {
        let cfg = ExperimentConfig::default();
        let t = cfg.train_config(&cfg.cell().unwrap()).unwrap();
        assert_eq!(t, TrainConfig::default());
        assert_eq!(cfg.grid().unwrap(), GridSpec::default());
        assert_eq!(cfg.metrics(0).unwrap(), MetricsConfig::default());
    }

    #[test]
    fn parses_comments_and_overrides() {
        let cfg = ExperimentConfig::parse("# run\n\nshape = torus\nsigma=0.02\nepochs = 3\n", None).unwrap();
        let cell = cfg.cell().unwrap();
        assert_eq!(cell.shape, ShapeId::Torus);
        assert_eq!(cell.sigma, 0.02);
        assert_eq!(cfg.train_config(&cell).unwrap().epochs, 3);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("sigma = 0.01\nlearning_rate = 3\n", None).unwrap_err();
        match err {
            Error::Config { key, .. } => assert_eq!(key, "learning_rate"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines_and_values() {
        assert!(matches!(ExperimentConfig::parse("sigma 0.01", None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("epochs = -1", None), Err(Error::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("epochs = 1\nepochs = 2", None), Err(Error::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("epochs = 1,2", None), Err(Error::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("mode = ", None), Err(Error::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("sigma = 0.01,,0.02", None), Err(Error::Config { .. })));
    }

    #[test]
    fn hash_ignores_spelling_and_out_dir() {
        let a = ExperimentConfig::parse("lr = 1e-4\nout_dir = /tmp/a", None).unwrap();
        let b = ExperimentConfig::parse("lr = 0.0001\nshape = sphere\nmu = 0.0", None).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = ExperimentConfig::parse("lr = 0.001", None).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn sweep_product_order() {
        let cfg = ExperimentConfig::parse("noise_law = gaussian, uniform\nmode = paired, single\nseed = 0,1,2", None).unwrap();
        let cells = cfg.cells().unwrap();
        assert_eq!(cells.len(), 12);
        assert_eq!(cells[0].noise_law, NoiseLaw::Gaussian);
        assert_eq!(cells[0].mode, SupervisionMode::PairedNoisy);
        assert_eq!(cells[2].seed, 2);
        assert_eq!(cells[3].mode, SupervisionMode::SingleNoisy);
        assert_eq!(cells[6].noise_law, NoiseLaw::Uniform);
        assert!(cfg.cell().is_err());
    }

    #[test]
    fn bias_only_for_gaussian() {
        let cfg = ExperimentConfig::parse("noise_law = uniform\nmu = 0.01", None).unwrap();
        assert!(cfg.cells().is_err());
    }
}
