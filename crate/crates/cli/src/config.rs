//! `key = value` experiment files.
//!
//! Blank lines and `#` comments are ignored. Every key has a default, so an
//! empty file is a valid configuration. The same keys are accepted by
//! `--set key=value` and appear, fully resolved, in every result bundle.

use std::fmt;
use std::path::{Path, PathBuf};

use fedsr_core::dataio::SyntheticConfig;
use fedsr_core::fedcore::{AggregatorKind, Algorithm, RunConfig};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self { line: None, key: None, message: message.into() }
    }

    fn at_key(key: &str, message: impl Into<String>) -> Self {
        Self { line: None, key: Some(key.to_string()), message: message.into() }
    }

    fn on_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key `{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic,
    File(PathBuf),
}

/// Everything needed to reproduce a result bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub data: DataSource,
    /// Seeds for the synthetic generator and the evaluation negatives. Kept
    /// apart from `seeds` so every repetition sees the same dataset.
    pub data_seed: u64,
    /// Users with fewer interactions are dropped.
    pub min_len: usize,
    pub seeds: Vec<u64>,
    /// Generator settings, used when `data = synthetic`.
    pub synthetic: SyntheticConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            data: DataSource::Synthetic,
            data_seed: 0,
            min_len: 3,
            seeds: vec![0],
            synthetic: SyntheticConfig::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "algorithm",
    "seeds",
    "data",
    "data_seed",
    "min_len",
    "synthetic.clients",
    "synthetic.items",
    "synthetic.clusters",
    "synthetic.min_len",
    "synthetic.max_len",
    "synthetic.noise",
    "synthetic.branching",
    "synthetic.home_items",
    "synthetic.revisit",
    "synthetic.length_clusters",
    "clients_per_round",
    "total_rounds",
    "local_epochs",
    "lr",
    "dropout",
    "d",
    "max_seq_len",
    "train_negatives",
    "k",
    "kmeans_max_iter",
    "lambda1",
    "lambda2",
    "v1",
    "v2",
    "aggregator",
    "alpha",
    "beta",
    "literal_normalization",
    "gamma",
    "ft_steps",
    "ft_lr",
    "interpolate_each_round",
    "reset_optimizer_each_round",
    "patience",
    "full_eval_every",
    "parallel",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError::at_key(key, format!("cannot parse `{value}`: {e}")))
}

pub fn parse_seeds(value: &str) -> Result<Vec<u64>, ConfigError> {
    let seeds = value
        .split(',')
        .map(|s| parse::<u64>("seeds", s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err(ConfigError::at_key("seeds", "empty seed list"));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let run = &mut self.run;
        let syn = &mut self.synthetic;
        match key {
            "algorithm" => run.algorithm = parse(key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "data" => {
                self.data = match value {
                    "synthetic" => DataSource::Synthetic,
                    path => DataSource::File(PathBuf::from(path)),
                }
            }
            "data_seed" => self.data_seed = parse(key, value)?,
            "min_len" => self.min_len = parse(key, value)?,
            "synthetic.clients" => syn.num_clients = parse(key, value)?,
            "synthetic.items" => syn.num_items = parse(key, value)?,
            "synthetic.clusters" => syn.num_clusters = parse(key, value)?,
            "synthetic.min_len" => syn.min_len = parse(key, value)?,
            "synthetic.max_len" => syn.max_len = parse(key, value)?,
            "synthetic.noise" => syn.noise = parse(key, value)?,
            "synthetic.branching" => syn.branching = parse(key, value)?,
            "synthetic.home_items" => syn.home_items = parse(key, value)?,
            "synthetic.revisit" => syn.revisit = parse(key, value)?,
            "synthetic.length_clusters" => syn.length_clusters = parse(key, value)?,
            "clients_per_round" => run.clients_per_round = parse(key, value)?,
            "total_rounds" => run.total_rounds = parse(key, value)?,
            "local_epochs" => run.local_epochs = parse(key, value)?,
            "lr" => run.lr = parse(key, value)?,
            "dropout" => run.dropout = parse(key, value)?,
            "d" => run.embedding_dim = parse(key, value)?,
            "max_seq_len" => run.max_seq_len = parse(key, value)?,
            "train_negatives" => run.train_negatives = parse(key, value)?,
            "k" => run.num_clusters = parse(key, value)?,
            "kmeans_max_iter" => run.kmeans_max_iter = parse(key, value)?,
            "lambda1" => run.lambda1 = parse(key, value)?,
            "lambda2" => run.lambda2 = parse(key, value)?,
            "v1" => run.v1 = parse(key, value)?,
            "v2" => run.v2 = parse(key, value)?,
            "aggregator" => {
                run.aggregator = match value {
                    "auto" => None,
                    other => Some(parse::<AggregatorKind>(key, other)?),
                }
            }
            "alpha" => run.alpha = parse(key, value)?,
            "beta" => run.beta = parse(key, value)?,
            "literal_normalization" => run.literal_normalization = parse(key, value)?,
            "gamma" => run.gamma = parse(key, value)?,
            "ft_steps" => run.ft_steps = parse(key, value)?,
            "ft_lr" => run.ft_lr = parse(key, value)?,
            "interpolate_each_round" => run.interpolate_each_round = parse(key, value)?,
            "reset_optimizer_each_round" => run.reset_optimizer_each_round = parse(key, value)?,
            "patience" => run.patience = parse(key, value)?,
            "full_eval_every" => run.full_eval_every = parse(key, value)?,
            "parallel" => run.parallel = parse(key, value)?,
            _ => return Err(ConfigError::at_key(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies `key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("override `{assignment}` is not key=value")))?;
        self.set(key.trim(), value)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("expected `key = value`, got `{line}`")).on_line(idx + 1))?;
            cfg.set(key.trim(), value).map_err(|e| e.on_line(idx + 1))?;
        }
        Ok(cfg)
    }

    /// Reads a config file, or the `config` object of a bundle summary.
    /// Relative data paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::parse(&text)?
        };
        if let DataSource::File(p) = &cfg.data {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.data = DataSource::File(base.join(p));
            }
        }
        Ok(cfg)
    }

    fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new(format!("invalid JSON: {e}")))?;
        let map = value
            .get("config")
            .and_then(Value::as_object)
            .ok_or_else(|| ConfigError::new("JSON file has no `config` object"))?;
        let mut cfg = Self::default();
        for (key, v) in map {
            let text = v.as_str().ok_or_else(|| ConfigError::at_key(key, "expected a string value"))?;
            cfg.set(key, text)?;
        }
        Ok(cfg)
    }

    /// Resolved value of every key, in `KEYS` order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let r = &self.run;
        let s = &self.synthetic;
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "algorithm" => r.algorithm.to_string(),
                    "seeds" => join(&self.seeds),
                    "data" => match &self.data {
                        DataSource::Synthetic => "synthetic".to_string(),
                        DataSource::File(p) => p.display().to_string(),
                    },
                    "data_seed" => self.data_seed.to_string(),
                    "min_len" => self.min_len.to_string(),
                    "synthetic.clients" => s.num_clients.to_string(),
                    "synthetic.items" => s.num_items.to_string(),
                    "synthetic.clusters" => s.num_clusters.to_string(),
                    "synthetic.min_len" => s.min_len.to_string(),
                    "synthetic.max_len" => s.max_len.to_string(),
                    "synthetic.noise" => s.noise.to_string(),
                    "synthetic.branching" => s.branching.to_string(),
                    "synthetic.home_items" => s.home_items.to_string(),
                    "synthetic.revisit" => s.revisit.to_string(),
                    "synthetic.length_clusters" => s.length_clusters.to_string(),
                    "clients_per_round" => r.clients_per_round.to_string(),
                    "total_rounds" => r.total_rounds.to_string(),
                    "local_epochs" => r.local_epochs.to_string(),
                    "lr" => r.lr.to_string(),
                    "dropout" => r.dropout.to_string(),
                    "d" => r.embedding_dim.to_string(),
                    "max_seq_len" => r.max_seq_len.to_string(),
                    "train_negatives" => r.train_negatives.to_string(),
                    "k" => r.num_clusters.to_string(),
                    "kmeans_max_iter" => r.kmeans_max_iter.to_string(),
                    "lambda1" => r.lambda1.to_string(),
                    "lambda2" => r.lambda2.to_string(),
                    "v1" => r.v1.to_string(),
                    "v2" => r.v2.to_string(),
                    "aggregator" => match r.aggregator {
                        None => "auto".to_string(),
                        Some(AggregatorKind::Fair) => "fair".to_string(),
                        Some(AggregatorKind::FedAvg) => "fedavg".to_string(),
                    },
                    "alpha" => r.alpha.to_string(),
                    "beta" => r.beta.to_string(),
                    "literal_normalization" => r.literal_normalization.to_string(),
                    "gamma" => r.gamma.to_string(),
                    "ft_steps" => r.ft_steps.to_string(),
                    "ft_lr" => r.ft_lr.to_string(),
                    "interpolate_each_round" => r.interpolate_each_round.to_string(),
                    "reset_optimizer_each_round" => r.reset_optimizer_each_round.to_string(),
                    "patience" => r.patience.to_string(),
                    "full_eval_every" => r.full_eval_every.to_string(),
                    "parallel" => r.parallel.to_string(),
                    other => unreachable!("key {other} missing from echo"),
                };
                (k, v)
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Run configuration for one repetition.
    pub fn run_config(&self, seed: u64) -> Result<RunConfig, ConfigError> {
        let cfg = RunConfig { seed, ..self.run.clone() };
        cfg.validate().map_err(|e| ConfigError::new(e.to_string()))?;
        Ok(cfg)
    }

    pub fn with_algorithm(&self, algorithm: Algorithm) -> Self {
        let mut cfg = self.clone();
        cfg.run.algorithm = algorithm;
        cfg
    }
}
