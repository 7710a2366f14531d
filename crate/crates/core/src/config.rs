//! Run configuration: a `key=value` file with `#` comments whose entries can
//! be overridden from the command line.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelMode;
use crate::train::TrainConfig;

/// Every key accepted in a config file or via `--set`.
pub const KEYS: &[&str] = &[
    "epochs",
    "batch_size",
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "seed",
    "shuffle",
    "clip_norm",
    "filters",
    "hidden",
    "gru_layers",
    "fnn_units",
    "mode",
    "snr_db",
    "manifest",
    "val_manifest",
    "out",
    "log",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub mode: ModelMode,
    pub snr_db: f64,
    pub manifest: Option<PathBuf>,
    pub val_manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Training-log CSV; defaults to the checkpoint path with `.log.csv`.
    pub log: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            mode: ModelMode::AttLoc,
            snr_db: 10.0,
            manifest: None,
            val_manifest: None,
            out: None,
            log: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value `{value}` for `{key}` (expected true/false)"))),
    }
}

impl RunConfig {
    /// Applies one `key=value` setting. Relative paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let value = value.trim();
        let path = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        let t = &mut self.train;
        match key {
            "epochs" => t.epochs = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "learning_rate" => t.adam.learning_rate = parse(key, value)?,
            "beta1" => t.adam.beta1 = parse(key, value)?,
            "beta2" => t.adam.beta2 = parse(key, value)?,
            "epsilon" => t.adam.epsilon = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "shuffle" => t.shuffle = parse_bool(key, value)?,
            "clip_norm" => {
                t.clip_norm = match value.to_ascii_lowercase().as_str() {
                    "none" | "off" => None,
                    _ => Some(parse(key, value)?),
                }
            }
            "filters" => t.arch.filters = parse(key, value)?,
            "hidden" => t.arch.hidden = parse(key, value)?,
            "gru_layers" => t.arch.gru_layers = parse(key, value)?,
            "fnn_units" => t.arch.fnn_units = parse(key, value)?,
            "mode" => self.mode = value.parse().map_err(|_| Error::Config(format!("invalid mode `{value}`")))?,
            "snr_db" => self.snr_db = parse(key, value)?,
            "manifest" => self.manifest = Some(path(value)),
            "val_manifest" => self.val_manifest = Some(path(value)),
            "out" => self.out = Some(path(value)),
            "log" => self.log = Some(path(value)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v, None)
    }

    /// Parses config text on top of the defaults.
    pub fn parse_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
            cfg.set(k, v, base).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::parse_str(&text, path.parent())
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config: "))))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::Config(format!("snr_db must be finite, got {}", self.snr_db)));
        }
        self.train.validate().map_err(|e| match e {
            Error::Shape(m) => Error::Config(m),
            other => other,
        })
    }

    /// `key=value` lines that reproduce this configuration.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let mut lines = vec![
            format!("epochs={}", t.epochs),
            format!("batch_size={}", t.batch_size),
            format!("learning_rate={}", t.adam.learning_rate),
            format!("beta1={}", t.adam.beta1),
            format!("beta2={}", t.adam.beta2),
            format!("epsilon={}", t.adam.epsilon),
            format!("seed={}", t.seed),
            format!("shuffle={}", t.shuffle),
            format!("clip_norm={}", t.clip_norm.map_or_else(|| "none".to_string(), |c| c.to_string())),
            format!("filters={}", t.arch.filters),
            format!("hidden={}", t.arch.hidden),
            format!("gru_layers={}", t.arch.gru_layers),
            format!("fnn_units={}", t.arch.fnn_units),
            format!("mode={}", self.mode),
            format!("snr_db={}", self.snr_db),
        ];
        for (k, v) in [("manifest", &self.manifest), ("val_manifest", &self.val_manifest), ("out", &self.out), ("log", &self.log)] {
            if let Some(p) = v {
                lines.push(format!("{k}={}", p.display()));
            }
        }
        lines.join("\n") + "\n"
    }
}
