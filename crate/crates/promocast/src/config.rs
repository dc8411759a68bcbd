//! Run configuration read from a flat `key = value` file.
//!
//! ```text
//! # comments start with '#'
//! data_dir = data
//! train_years = 2015, 2016, 2017
//! test_year = 2018
//! validation_fraction = 0.2
//! groups = vegetables, fruits, dairy
//! budget = 24
//! seed = 42
//! out = out
//! synth.n_stores = 4
//! synth.elasticity = 3
//! ```
//!
//! Relative paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use promocast_core::dataprep::PrepConfig;
use promocast_core::hpo::N_ORDERS;
use promocast_core::synth::GenConfig;
use thiserror::Error;

use crate::io::DataPaths;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected key = value, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {value:?}")]
    BadValue { line: usize, key: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Directory holding the four standard CSV files.
    pub data_dir: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub receipts: Option<PathBuf>,
    pub promotions: Option<PathBuf>,
    pub stores: Option<PathBuf>,
    pub prep: PrepConfig,
    /// Orders tried by the optimizer.
    pub budget: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub memoize: bool,
    pub refine: bool,
    /// Generator settings; the seed is derived from [`RunConfig::seed`].
    pub synth: GenConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            catalog: None,
            receipts: None,
            promotions: None,
            stores: None,
            prep: PrepConfig::default(),
            budget: 24,
            seed: 42,
            out: PathBuf::from("out"),
            memoize: true,
            refine: true,
            synth: GenConfig::default(),
        }
    }
}

fn list<T: FromStr>(value: &str) -> Option<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}

fn boolean(value: &str) -> Option<bool> {
    match value {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Parses config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut out_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (key, value) = l
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::Syntax { line, text: raw.to_string() })?;
            let bad = || ConfigError::BadValue { line, key: key.to_string(), value: value.to_string() };
            let path = || base.join(value);
            fn num<T: FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
                v.parse().map_err(|_| bad())
            }
            let s = &mut cfg.synth;
            match key {
                "data_dir" => cfg.data_dir = Some(path()),
                "catalog" => cfg.catalog = Some(path()),
                "receipts" => cfg.receipts = Some(path()),
                "promotions" => cfg.promotions = Some(path()),
                "stores" => cfg.stores = Some(path()),
                "out" => {
                    cfg.out = path();
                    out_set = true;
                }
                "train_years" => cfg.prep.train_years = list(value).ok_or_else(bad)?,
                "test_year" => cfg.prep.test_year = num(value, bad)?,
                "validation_fraction" => cfg.prep.validation_fraction = num(value, bad)?,
                "groups" => {
                    cfg.prep.groups = list(value).ok_or_else(bad)?;
                    cfg.synth.groups = cfg.prep.groups.clone();
                }
                "budget" => cfg.budget = num(value, bad)?,
                "seed" => cfg.seed = num(value, bad)?,
                "memoize" => cfg.memoize = boolean(value).ok_or_else(bad)?,
                "refine" => cfg.refine = boolean(value).ok_or_else(bad)?,
                "synth.n_stores" => s.n_stores = num(value, bad)?,
                "synth.products_per_group" => s.products_per_group = num(value, bad)?,
                "synth.filler_products" => s.filler_products = num(value, bad)?,
                "synth.start_year" => s.start_year = num(value, bad)?,
                "synth.n_years" => s.n_years = num(value, bad)?,
                "synth.base_demand" => s.base_demand = num(value, bad)?,
                "synth.clients_per_day" => s.clients_per_day = num(value, bad)?,
                "synth.promotions_per_year" => s.promotions_per_year = num(value, bad)?,
                "synth.elasticity" => s.elasticity = num(value, bad)?,
                "synth.traffic_lift" => s.traffic_lift = num(value, bad)?,
                "synth.seasonal_amplitude" => s.seasonal_amplitude = num(value, bad)?,
                "synth.noise" => s.noise = num(value, bad)?,
                "synth.channel_lift" => {
                    let v: Vec<f64> = list(value).ok_or_else(bad)?;
                    s.channel_lift = v.try_into().map_err(|_| bad())?;
                }
                "synth.store_size" => {
                    let v: Vec<f64> = list(value).ok_or_else(bad)?;
                    let [lo, hi]: [f64; 2] = v.try_into().map_err(|_| bad())?;
                    s.store_size = (lo, hi);
                }
                _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
            }
        }
        if !out_set {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.prep.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.budget == 0 || self.budget > N_ORDERS {
            return Err(ConfigError::Invalid(format!("budget must be in 1..={N_ORDERS}, got {}", self.budget)));
        }
        self.synth_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Where the four input files live: explicit paths first, then
    /// `data_dir`, then `<out>/data`.
    pub fn data_paths(&self) -> DataPaths {
        let dir = self.data_dir.clone().unwrap_or_else(|| self.out.join("data"));
        let d = DataPaths::in_dir(&dir);
        DataPaths {
            catalog: self.catalog.clone().unwrap_or(d.catalog),
            receipts: self.receipts.clone().unwrap_or(d.receipts),
            promotions: self.promotions.clone().unwrap_or(d.promotions),
            stores: self.stores.clone().unwrap_or(d.stores),
        }
    }

    /// Generator settings covering the configured years and groups.
    pub fn synth_config(&self) -> GenConfig {
        let mut g = self.synth.clone();
        g.seed = promocast_core::seed::derive(self.seed, "synth");
        if !self.prep.groups.is_empty() {
            g.groups = self.prep.groups.clone();
        }
        g
    }

    pub fn models_dir(&self, optimized: bool) -> PathBuf {
        self.out.join("models").join(if optimized { "optimized" } else { "default" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys() {
        let text = "# run\nseed = 7\ntrain_years = 2016, 2017\ntest_year = 2018\n\
                    groups = fruits, dairy\nbudget = 3\nsynth.channel_lift = 1,1,1,1\nout = res\n";
        let cfg = RunConfig::parse(text, Path::new("/tmp/x")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.prep.train_years, [2016, 2017]);
        assert_eq!(cfg.prep.groups, ["fruits", "dairy"]);
        assert_eq!(cfg.synth.channel_lift, [1.0; 4]);
        assert_eq!(cfg.out, Path::new("/tmp/x/res"));
        assert_eq!(cfg.data_paths().stores, Path::new("/tmp/x/res/data/stores.csv"));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_lines() {
        let base = Path::new(".");
        assert!(matches!(RunConfig::parse("seed 7", base), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse("\ncolour = red", base), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!(RunConfig::parse("budget = many", base), Err(ConfigError::BadValue { .. })));
        let cfg = RunConfig::parse("test_year = 2016", base).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
        let cfg = RunConfig::parse("budget = 721", base).unwrap();
        assert!(cfg.validate().is_err());
    }
}
