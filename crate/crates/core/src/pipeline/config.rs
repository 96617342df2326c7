use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::data::SplitSpec;
use crate::error::{Error, Result};
use crate::mrf::{Neighborhood, DEFAULT_MAX_SWEEPS};
use crate::nn::{ConvSpec, InitScheme, NetworkConfig, TrainConfig};

/// Label update used between training phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Network only, trained on the labeled split for the whole budget.
    Cnn,
    CnnMrf,
    CnnMedian,
    CnnMajority,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cnn, Method::CnnMrf, Method::CnnMedian, Method::CnnMajority];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cnn => "cnn",
            Method::CnnMrf => "cnn-mrf",
            Method::CnnMedian => "cnn-median",
            Method::CnnMajority => "cnn-majority",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown method `{s}` (expected cnn, cnn-mrf, cnn-median or cnn-majority)")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a full run needs. Defaults follow the reference setup:
/// smoothness 20, learning rate 0.001, batch 100, 9×9 patches and a
/// 30 + 10·k epoch schedule capped at 60.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cube: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub method: Method,
    pub seed: u64,
    pub repeats: usize,
    pub train_split: SplitSpec,

    pub patch_size: usize,
    pub conv: Vec<ConvSpec>,
    pub dense: Vec<usize>,
    pub dropout: f64,
    pub init: InitScheme,

    pub learning_rate: f64,
    pub batch_size: usize,
    pub augment: bool,

    pub mu: f64,
    pub neighborhood: Neighborhood,
    pub max_sweeps: usize,
    /// Window side for the median and majority regularizers.
    pub window: usize,

    pub initial_epochs: usize,
    pub period: usize,
    pub max_epochs: usize,
    /// Upper bound on patches drawn per retraining epoch.
    pub retrain_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let net = NetworkConfig::new(1, 1);
        let train = TrainConfig::default();
        Self {
            cube: None,
            labels: None,
            output: None,
            method: Method::CnnMrf,
            seed: 0,
            repeats: 1,
            train_split: SplitSpec::Fraction(0.01),
            patch_size: net.patch_size,
            conv: net.conv,
            dense: net.dense,
            dropout: net.dropout,
            init: net.init,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            augment: train.augment,
            mu: 20.0,
            neighborhood: Neighborhood::Four,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            window: 3,
            initial_epochs: 30,
            period: 10,
            max_epochs: 60,
            retrain_cap: 20_000,
        }
    }
}

/// Keys accepted by [`RunConfig::set`], in echo order.
pub const KEYS: &[&str] = &[
    "cube",
    "labels",
    "output",
    "method",
    "seed",
    "repeats",
    "train_fraction",
    "train_count",
    "patch_size",
    "conv1_kernel",
    "conv1_width",
    "conv2_kernel",
    "conv2_width",
    "dense_widths",
    "depth_preset",
    "dropout",
    "init",
    "learning_rate",
    "batch_size",
    "augment",
    "mu",
    "neighborhood",
    "max_sweeps",
    "window",
    "initial_epochs",
    "period",
    "max_epochs",
    "retrain_cap",
];

fn parse<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("key `{key}`: expected {what}, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("key `{key}`: expected true or false, got `{value}`"))),
    }
}

impl RunConfig {
    /// Sets one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = "a non-negative integer";
        let real = "a real number";
        match key {
            "cube" => self.cube = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "method" => {
                self.method = value
                    .parse()
                    .map_err(|e: Error| Error::config(format!("key `method`: {e}")))?
            }
            "seed" => self.seed = parse(key, value, int)?,
            "repeats" => self.repeats = parse(key, value, int)?,
            "train_fraction" => self.train_split = SplitSpec::Fraction(parse(key, value, real)?),
            "train_count" => self.train_split = SplitSpec::Count(parse(key, value, int)?),
            "patch_size" => self.patch_size = parse(key, value, int)?,
            "conv1_kernel" => self.conv_mut(0, key)?.kernel = parse(key, value, int)?,
            "conv1_width" => self.conv_mut(0, key)?.filters = parse(key, value, int)?,
            "conv2_kernel" => self.conv_mut(1, key)?.kernel = parse(key, value, int)?,
            "conv2_width" => self.conv_mut(1, key)?.filters = parse(key, value, int)?,
            "dense_widths" => {
                self.dense = if value.trim().is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse(key, v.trim(), "a comma-separated list of widths"))
                        .collect::<Result<_>>()?
                }
            }
            "depth_preset" => {
                let depth: usize = parse(key, value, int)?;
                let preset = self.network_config(1, 1).with_depth(depth)?;
                self.conv = preset.conv;
                self.dense = preset.dense;
            }
            "dropout" => self.dropout = parse(key, value, real)?,
            "init" => {
                self.init = InitScheme::parse(value)
                    .ok_or_else(|| Error::config(format!("key `init`: expected scaled or raw, got `{value}`")))?
            }
            "learning_rate" => self.learning_rate = parse(key, value, real)?,
            "batch_size" => self.batch_size = parse(key, value, int)?,
            "augment" => self.augment = parse_bool(key, value)?,
            "mu" => self.mu = parse(key, value, real)?,
            "neighborhood" => {
                self.neighborhood = match value {
                    "4" => Neighborhood::Four,
                    "8" => Neighborhood::Eight,
                    _ => return Err(Error::config(format!("key `neighborhood`: expected 4 or 8, got `{value}`"))),
                }
            }
            "max_sweeps" => self.max_sweeps = parse(key, value, int)?,
            "window" => self.window = parse(key, value, int)?,
            "initial_epochs" => self.initial_epochs = parse(key, value, int)?,
            "period" => self.period = parse(key, value, int)?,
            "max_epochs" => self.max_epochs = parse(key, value, int)?,
            "retrain_cap" => self.retrain_cap = parse(key, value, int)?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn conv_mut(&mut self, i: usize, key: &str) -> Result<&mut ConvSpec> {
        let len = self.conv.len();
        self.conv
            .get_mut(i)
            .ok_or_else(|| Error::config(format!("key `{key}`: network has only {len} convolution block(s)")))
    }

    /// Applies a `key = value` text; later lines win. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::config(format!("line {}: {}", n + 1, strip_config(e))))?;
        }
        Ok(())
    }

    /// Parses a config text on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        pairs.into_iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::config("period must be at least 1"));
        }
        if self.max_epochs < self.initial_epochs {
            return Err(Error::config(format!(
                "max_epochs ({}) is below initial_epochs ({})",
                self.max_epochs, self.initial_epochs
            )));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::config(format!("mu must be >= 0, got {}", self.mu)));
        }
        if self.retrain_cap == 0 {
            return Err(Error::config("retrain_cap must be at least 1"));
        }
        if matches!(self.method, Method::CnnMedian | Method::CnnMajority) {
            crate::regularize::WindowSpec::new(self.window)?;
        }
        self.train_config().validate()?;
        Ok(())
    }

    pub fn network_config(&self, bands: usize, classes: usize) -> NetworkConfig {
        NetworkConfig {
            patch_size: self.patch_size,
            bands,
            classes,
            conv: self.conv.clone(),
            dense: self.dense.clone(),
            dropout: self.dropout,
            init: self.init,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            dropout: self.dropout > 0.0,
            augment: self.augment,
            seed: self.seed,
        }
    }

    /// The resolved configuration as `key = value` lines that parse back to
    /// an equal config (layer widths are always written explicitly).
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if self.cube.is_some() {
            line("cube", path(&self.cube));
        }
        if self.labels.is_some() {
            line("labels", path(&self.labels));
        }
        if self.output.is_some() {
            line("output", path(&self.output));
        }
        line("method", self.method.to_string());
        line("seed", self.seed.to_string());
        line("repeats", self.repeats.to_string());
        match self.train_split {
            SplitSpec::Fraction(f) => line("train_fraction", f.to_string()),
            SplitSpec::Count(c) => line("train_count", c.to_string()),
        }
        line("patch_size", self.patch_size.to_string());
        for (i, c) in self.conv.iter().enumerate() {
            line(&format!("conv{}_kernel", i + 1), c.kernel.to_string());
            line(&format!("conv{}_width", i + 1), c.filters.to_string());
        }
        line(
            "dense_widths",
            self.dense.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","),
        );
        line("dropout", self.dropout.to_string());
        line("init", self.init.name().to_string());
        line("learning_rate", self.learning_rate.to_string());
        line("batch_size", self.batch_size.to_string());
        line("augment", self.augment.to_string());
        line("mu", self.mu.to_string());
        line(
            "neighborhood",
            match self.neighborhood {
                Neighborhood::Four => "4",
                Neighborhood::Eight => "8",
            }
            .to_string(),
        );
        line("max_sweeps", self.max_sweeps.to_string());
        line("window", self.window.to_string());
        line("initial_epochs", self.initial_epochs.to_string());
        line("period", self.period.to_string());
        line("max_epochs", self.max_epochs.to_string());
        line("retrain_cap", self.retrain_cap.to_string());
        out
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        let cfg = RunConfig::from_text("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.mu, 20.0);
        assert_eq!(cfg.learning_rate, 0.001);
        assert_eq!(cfg.batch_size, 100);
        assert_eq!(cfg.patch_size, 9);
        assert_eq!((cfg.initial_epochs, cfg.period, cfg.max_epochs), (30, 10, 60));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::from_text("mu = 20\n# comment\n\nseed = 3 # trailing").unwrap();
        cfg.apply_overrides([("mu", "5")]).unwrap();
        assert_eq!(cfg.mu, 5.0);
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        let err = RunConfig::from_text("muu = 20").unwrap_err().to_string();
        assert!(err.contains("muu"), "{err}");
        let err = RunConfig::from_text("mu = lots").unwrap_err().to_string();
        assert!(err.contains("`mu`"), "{err}");
        assert!(RunConfig::from_text("just words").is_err());
        assert!(RunConfig::from_text("method = svm").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("depth_preset = 11\nmethod = cnn-majority\nwindow = 5\ntrain_count = 7\ncube = a.bin").unwrap();
        let back = RunConfig::from_text(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.dense, vec![200, 100, 100, 100, 100, 100]);
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        cfg.max_epochs = 10;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.period = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.method = Method::CnnMedian;
        cfg.window = 4;
        assert!(cfg.validate().is_err());
    }
}
