//! Result bundles on disk.
//!
//! ```text
//! <out>/<algorithm>-<config hash>/
//!     config.txt
//!     summary.json          means over seeds, config echo
//!     seed-<s>/rounds.csv
//!     seed-<s>/summary.json per-client test outcomes
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fedsr_core::dataio::{build_clients, generate_synthetic, load_interactions, write_interactions, ClientDataset};
use fedsr_core::fedcore::{run_experiment, Algorithm, ExperimentResult, Summary};
use fedsr_core::metrics::{EvalOutcome, FairnessReport, MetricMeans};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{DataSource, ExperimentConfig};
use crate::CliError;

pub struct Dataset {
    pub clients: Vec<ClientDataset>,
    pub num_items: usize,
    pub hash: String,
}

fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let log = match &cfg.data {
        DataSource::Synthetic => {
            let syn = fedsr_core::dataio::SyntheticConfig { seed: cfg.data_seed, ..cfg.synthetic.clone() };
            generate_synthetic(&syn)?
        }
        DataSource::File(path) => load_interactions(path)?,
    };
    let clients = build_clients(&log, cfg.min_len, cfg.data_seed)?;
    let mut fingerprint = write_interactions(&log);
    write!(fingerprint, "min_len={} data_seed={}", cfg.min_len, cfg.data_seed).expect("string write");
    Ok(Dataset {
        clients,
        num_items: log.num_items(),
        hash: short_hash(fingerprint.as_bytes()),
    })
}

/// Headline metrics; seed-level values or means over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub hr5: f64,
    pub ndcg5: f64,
    pub hr10: f64,
    pub ndcg10: f64,
    pub fairness_variance: f64,
    /// Runs that never converged count as the number of rounds executed.
    pub convergence_round: f64,
    pub rounds_executed: f64,
    pub total_bytes: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 8] = [
        "hr5",
        "ndcg5",
        "hr10",
        "ndcg10",
        "fairness_variance",
        "convergence_round",
        "rounds_executed",
        "total_bytes",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.hr5,
            self.ndcg5,
            self.hr10,
            self.ndcg10,
            self.fairness_variance,
            self.convergence_round,
            self.rounds_executed,
            self.total_bytes,
        ]
    }

    fn from_values(v: [f64; 8]) -> Self {
        Self {
            hr5: v[0],
            ndcg5: v[1],
            hr10: v[2],
            ndcg10: v[3],
            fairness_variance: v[4],
            convergence_round: v[5],
            rounds_executed: v[6],
            total_bytes: v[7],
        }
    }

    pub fn of(summary: &Summary) -> Self {
        let m = &summary.means;
        Self {
            hr5: m.hr5,
            ndcg5: m.ndcg5,
            hr10: m.hr10,
            ndcg10: m.ndcg10,
            fairness_variance: summary.fairness_variance,
            convergence_round: summary.convergence_round.unwrap_or(summary.rounds_executed) as f64,
            rounds_executed: summary.rounds_executed as f64,
            total_bytes: summary.total_bytes as f64,
        }
    }

    pub fn mean(sets: &[MetricSet]) -> Self {
        let mut acc = [0.0; 8];
        for s in sets {
            acc.iter_mut().zip(s.values()).for_each(|(a, v)| *a += v);
        }
        let n = sets.len().max(1) as f64;
        Self::from_values(acc.map(|a| a / n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub metrics: MetricSet,
    pub convergence_round: Option<usize>,
    pub early_stopped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSummary {
    pub algorithm: Algorithm,
    pub config_hash: String,
    pub dataset_hash: String,
    pub seeds: Vec<u64>,
    /// Feeding this back through `--config summary.json` reproduces the run.
    pub config: BTreeMap<String, String>,
    pub metrics: MetricSet,
    pub per_seed: Vec<SeedSummary>,
}

/// Contents of `seed-<s>/summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub summary: SeedSummary,
    pub history: Vec<(usize, f64)>,
    pub test_outcomes: Vec<EvalOutcome>,
}

impl SeedRecord {
    /// Recomputes the test metrics from the stored per-client outcomes.
    pub fn recompute(&self) -> Result<(MetricMeans, f64), CliError> {
        let fairness = FairnessReport::of(&self.test_outcomes)?;
        Ok((MetricMeans::of(&self.test_outcomes), fairness.variance))
    }
}

pub struct Bundle {
    pub dir: PathBuf,
    pub summary: BundleSummary,
    pub results: Vec<ExperimentResult>,
}

pub fn rounds_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("round,hr5,ndcg5,hr10,ndcg10,fairness_variance,participants,cumulative_bytes\n");
    for r in &result.rounds {
        let m = &r.means;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.round,
            m.hr5,
            m.ndcg5,
            m.hr10,
            m.ndcg10,
            r.fairness_variance,
            r.participants.len(),
            r.cumulative_bytes
        )
        .expect("string write");
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    short_hash(cfg.to_text().as_bytes())
}

pub fn bundle_dir(out: &Path, cfg: &ExperimentConfig) -> PathBuf {
    out.join(format!("{}-{}", cfg.run.algorithm, config_hash(cfg)))
}

/// Runs every seed of `cfg` on `data` and writes the bundle under `out`.
pub fn run_bundle(cfg: &ExperimentConfig, data: &Dataset, out: &Path) -> Result<Bundle, CliError> {
    let configs = cfg
        .seeds
        .iter()
        .map(|&s| cfg.run_config(s))
        .collect::<Result<Vec<_>, _>>()?;
    let results = configs
        .par_iter()
        .map(|rc| {
            log::info!("{} seed {}", rc.algorithm, rc.seed);
            run_experiment(rc, &data.clients, data.num_items).map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let dir = bundle_dir(out, cfg);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut per_seed = Vec::new();
    for r in &results {
        let seed_dir = dir.join(format!("seed-{}", r.seed));
        fs::create_dir_all(&seed_dir).map_err(|e| CliError::io(&seed_dir, e))?;
        let csv_path = seed_dir.join("rounds.csv");
        fs::write(&csv_path, rounds_csv(r)).map_err(|e| CliError::io(&csv_path, e))?;
        let summary = SeedSummary {
            seed: r.seed,
            metrics: MetricSet::of(&r.summary),
            convergence_round: r.summary.convergence_round,
            early_stopped: r.summary.early_stopped,
        };
        let record = SeedRecord {
            algorithm: r.algorithm,
            seed: r.seed,
            summary: summary.clone(),
            history: r.history.clone(),
            test_outcomes: r.test_outcomes.clone(),
        };
        write_json(&seed_dir.join("summary.json"), &record)?;
        per_seed.push(summary);
    }

    let metrics: Vec<MetricSet> = per_seed.iter().map(|s| s.metrics.clone()).collect();
    let summary = BundleSummary {
        algorithm: cfg.run.algorithm,
        config_hash: config_hash(cfg),
        dataset_hash: data.hash.clone(),
        seeds: cfg.seeds.clone(),
        config: cfg.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        metrics: MetricSet::mean(&metrics),
        per_seed,
    };
    let config_path = dir.join("config.txt");
    fs::write(&config_path, cfg.to_text()).map_err(|e| CliError::io(&config_path, e))?;
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(Bundle { dir, summary, results })
}

pub fn read_summary(path: &Path) -> Result<BundleSummary, CliError> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: incompatible or malformed bundle summary: {e}", file.display())))
}
