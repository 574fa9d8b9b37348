//! Command implementations behind the `fedsr` binary.

pub mod bundle;
pub mod compare;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use fedsr_core::fedcore::Algorithm;

pub use bundle::{load_dataset, read_summary, run_bundle, Bundle, BundleSummary, MetricSet};
pub use compare::{relative_change, Comparison};
pub use config::{ConfigError, DataSource, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }
}

impl From<fedsr_core::error::Error> for CliError {
    fn from(err: fedsr_core::error::Error) -> Self {
        match err {
            fedsr_core::error::Error::Config(msg) => CliError::Config(ConfigError {
                line: None,
                key: None,
                message: msg,
            }),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<Bundle, CliError> {
    let data = load_dataset(cfg)?;
    run_bundle(cfg, &data, out)
}

fn write_comparison(out: &Path, stem: &str, cmp: &Comparison) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for (ext, text) in [("csv", cmp.to_csv()), ("txt", cmp.to_text())] {
        let path = out.join(format!("{stem}.{ext}"));
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// Compares stored bundles against the first one. Writes
/// `comparison.{csv,txt}` when `out` is given.
pub fn cmd_compare(paths: &[PathBuf], out: Option<&Path>) -> Result<Comparison, CliError> {
    if paths.len() < 2 {
        return Err(CliError::Runtime("compare needs at least two bundles".into()));
    }
    let bundles = paths
        .iter()
        .map(|p| {
            let label = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            read_summary(p).map(|s| (label, s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = Comparison::of_bundles(&bundles);
    if let Some(out) = out {
        write_comparison(out, "comparison", &cmp)?;
    }
    Ok(cmp)
}

pub const ABLATION: [Algorithm; 4] = [
    Algorithm::CfFedsr,
    Algorithm::Variation1,
    Algorithm::Variation2,
    Algorithm::Variation3,
];

/// Runs the full method and its three ablations on one shared dataset.
pub fn cmd_ablate(cfg: &ExperimentConfig, out: &Path) -> Result<(Vec<Bundle>, Comparison), CliError> {
    let data = load_dataset(cfg)?;
    let bundles = ABLATION
        .iter()
        .map(|&a| run_bundle(&cfg.with_algorithm(a), &data, out))
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = Comparison::new(
        bundles
            .iter()
            .map(|b| (b.summary.algorithm.to_string(), b.summary.metrics.clone()))
            .collect(),
    );
    write_comparison(out, "ablation", &cmp)?;
    Ok((bundles, cmp))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Dim,
    Clusters,
    Gamma,
    AlphaBeta,
}

impl std::str::FromStr for SweepParam {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "d" => Ok(SweepParam::Dim),
            "k" => Ok(SweepParam::Clusters),
            "gamma" => Ok(SweepParam::Gamma),
            "alpha_beta" => Ok(SweepParam::AlphaBeta),
            other => Err(ConfigError {
                line: None,
                key: None,
                message: format!("unknown sweep parameter `{other}` (expected d, k, gamma or alpha_beta)"),
            }),
        }
    }
}

impl SweepParam {
    /// Applies one sweep value. `alpha_beta` values are written `alpha:beta`.
    pub fn apply(self, cfg: &mut ExperimentConfig, value: &str) -> Result<(), ConfigError> {
        match self {
            SweepParam::Dim => cfg.set("d", value),
            SweepParam::Clusters => cfg.set("k", value),
            SweepParam::Gamma => cfg.set("gamma", value),
            SweepParam::AlphaBeta => {
                let (a, b) = value.split_once(':').ok_or_else(|| ConfigError {
                    line: None,
                    key: Some("alpha_beta".into()),
                    message: format!("expected alpha:beta, got `{value}`"),
                })?;
                cfg.set("alpha", a)?;
                cfg.set("beta", b)
            }
        }
    }
}

/// One bundle per value, everything else fixed.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    param: SweepParam,
    values: &[String],
    out: &Path,
) -> Result<(Vec<Bundle>, Comparison), CliError> {
    if values.is_empty() {
        return Err(CliError::Runtime("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            param.apply(&mut c, v).map(|_| c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let data = load_dataset(cfg)?;
    let bundles = configs
        .iter()
        .map(|c| run_bundle(c, &data, out))
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = Comparison::new(
        values
            .iter()
            .zip(&bundles)
            .map(|(v, b)| (v.clone(), b.summary.metrics.clone()))
            .collect(),
    );
    write_comparison(out, "sweep", &cmp)?;
    Ok((bundles, cmp))
}
