use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedsr_cli::config::parse_seeds;
use fedsr_cli::{cmd_ablate, cmd_compare, cmd_run, cmd_sweep, CliError, ExperimentConfig, SweepParam};

#[derive(Parser)]
#[command(name = "fedsr", about = "Federated sequential recommendation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (`key = value` lines) or a bundle summary.json.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Comma-separated seeds, e.g. 1,2,3,4,5.
    #[arg(long)]
    seeds: Option<String>,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = parse_seeds(seeds)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over every seed.
    Run(Common),
    /// Compare bundles against the first one.
    Compare {
        #[arg(required = true, num_args = 2..)]
        bundles: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run cf_fedsr and variations 1 to 3.
    Ablate(Common),
    /// Vary one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// d, k, gamma or alpha_beta.
        #[arg(long)]
        param: String,
        /// Comma-separated; alpha_beta values are written alpha:beta.
        #[arg(long)]
        values: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let bundle = cmd_run(&common.experiment()?, &common.out)?;
            println!("{}", bundle.dir.display());
            let m = &bundle.summary.metrics;
            println!(
                "hr5 {:.4}  ndcg5 {:.4}  hr10 {:.4}  ndcg10 {:.4}  fairness_variance {:.4}  convergence_round {:.1}",
                m.hr5, m.ndcg5, m.hr10, m.ndcg10, m.fairness_variance, m.convergence_round
            );
        }
        Command::Compare { bundles, out } => {
            print!("{}", cmd_compare(&bundles, out.as_deref())?.to_text());
        }
        Command::Ablate(common) => {
            let (_, cmp) = cmd_ablate(&common.experiment()?, &common.out)?;
            print!("{}", cmp.to_text());
        }
        Command::Sweep { common, param, values } => {
            let param: SweepParam = param.parse()?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
            let (_, cmp) = cmd_sweep(&common.experiment()?, param, &values, &common.out)?;
            print!("{}", cmp.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
