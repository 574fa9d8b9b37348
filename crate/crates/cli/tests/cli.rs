use std::fs;
use std::path::Path;
use std::process::Command;

use fedsr_cli::bundle::SeedRecord;
use fedsr_cli::{
    cmd_ablate, cmd_compare, cmd_run, cmd_sweep, read_summary, relative_change, Comparison, ExperimentConfig, MetricSet,
    SweepParam,
};
use fedsr_core::fedcore::Algorithm;

fn tiny() -> ExperimentConfig {
    ExperimentConfig::parse(
        "# small run\n\
         synthetic.clients = 40\n\
         synthetic.items = 150\n\
         synthetic.noise = 0.5\n\
         total_rounds = 3\n\
         clients_per_round = 8\n\
         d = 8\n\
         train_negatives = 10\n\
         lambda2 = 1\n\
         seeds = 4,5\n",
    )
    .unwrap()
}

#[test]
fn parse_reports_line_and_key() {
    let err = ExperimentConfig::parse("d = 8\n\nbogus = 1\n").unwrap_err();
    assert_eq!(err.line, Some(3));
    assert_eq!(err.key.as_deref(), Some("bogus"));
    let err = ExperimentConfig::parse("lr = fast\n").unwrap_err();
    assert_eq!((err.line, err.key.as_deref()), (Some(1), Some("lr")));
    assert!(err.to_string().contains("line 1"));
    let err = ExperimentConfig::parse("just words\n").unwrap_err();
    assert_eq!(err.line, Some(1));
    assert!(ExperimentConfig::parse("").unwrap() == ExperimentConfig::default());
}

#[test]
fn echo_round_trips() {
    let mut cfg = tiny();
    cfg.apply_override("aggregator=fedavg").unwrap();
    cfg.apply_override("algorithm=variation2").unwrap();
    assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    let default = ExperimentConfig::default();
    assert_eq!(ExperimentConfig::parse(&default.to_text()).unwrap(), default);
}

#[test]
fn relative_change_matches_hand_values() {
    assert!((relative_change(0.4073, 0.3740).unwrap() - 0.0890).abs() < 5e-5);
    assert_eq!(relative_change(0.3, 0.3), Some(0.0));
    assert_eq!(relative_change(0.3, 0.0), None);
    let m = MetricSet {
        hr5: 0.1,
        ndcg5: 0.1,
        hr10: 0.374,
        ndcg10: 0.2,
        fairness_variance: 0.5,
        convergence_round: 75.0,
        rounds_executed: 80.0,
        total_bytes: 1.0,
    };
    let better = MetricSet { hr10: 0.4073, ..m.clone() };
    let cmp = Comparison::new(vec![("a".into(), m.clone()), ("b".into(), better), ("c".into(), m)]);
    assert!(cmp.to_text().contains("0.4073 (+8.90%)"));
    assert!(cmp.improvements(2).iter().all(|c| *c == Some(0.0)));
    assert_eq!(cmp.to_csv().lines().count(), 1 + 3 * MetricSet::NAMES.len());
}

#[test]
fn run_writes_consistent_bundle() {
    let out = tempfile::tempdir().unwrap();
    let cfg = tiny();
    let bundle = cmd_run(&cfg, out.path()).unwrap();
    assert_eq!(read_summary(&bundle.dir).unwrap(), bundle.summary);
    for seed in &cfg.seeds {
        let seed_dir = bundle.dir.join(format!("seed-{seed}"));
        let csv = fs::read_to_string(seed_dir.join("rounds.csv")).unwrap();
        let result = bundle.results.iter().find(|r| r.seed == *seed).unwrap();
        assert_eq!(csv.lines().count(), 1 + result.rounds.len());
        let record: SeedRecord = serde_json::from_str(&fs::read_to_string(seed_dir.join("summary.json")).unwrap()).unwrap();
        let (means, variance) = record.recompute().unwrap();
        assert_eq!(means.hr10, record.summary.metrics.hr10);
        assert_eq!(means.ndcg5, record.summary.metrics.ndcg5);
        assert_eq!(variance, record.summary.metrics.fairness_variance);
    }

    // feeding the echoed config back reproduces the bundle
    let again = tempfile::tempdir().unwrap();
    let reloaded = ExperimentConfig::load(&bundle.dir.join("summary.json")).unwrap();
    assert_eq!(reloaded, cfg);
    let second = cmd_run(&reloaded, again.path()).unwrap();
    assert_eq!(second.summary, bundle.summary);
}

#[test]
fn zero_rounds_gives_header_only_csv() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = tiny();
    cfg.apply_override("total_rounds=0").unwrap();
    let bundle = cmd_run(&cfg, out.path()).unwrap();
    let csv = fs::read_to_string(bundle.dir.join("seed-4/rounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert_eq!(bundle.summary.metrics.rounds_executed, 0.0);
    assert_eq!(bundle.summary.metrics.total_bytes, 0.0);
}

#[test]
fn compare_self_and_pairs() {
    let out = tempfile::tempdir().unwrap();
    let a = cmd_run(&tiny(), out.path()).unwrap();
    let b = cmd_run(&tiny().with_algorithm(Algorithm::Fedavg), out.path()).unwrap();
    let cmp = cmd_compare(&[a.dir.clone(), a.dir.clone()], None).unwrap();
    assert!(cmp.improvements(1).iter().all(|c| c.is_none_or(|v| v == 0.0)));
    let cmp = cmd_compare(&[b.dir.clone(), a.dir.clone(), b.dir.clone()], Some(out.path())).unwrap();
    assert_eq!(cmp.labels.len(), 3);
    assert!(out.path().join("comparison.csv").exists());
    assert!(cmd_compare(std::slice::from_ref(&a.dir), None).is_err());
    fs::write(out.path().join("broken.json"), "{\"algorithm\": \"fedavg\"}").unwrap();
    assert!(cmd_compare(&[a.dir, out.path().join("broken.json")], None).is_err());
}

#[test]
fn ablation_shares_dataset_and_maps_variants() {
    let out = tempfile::tempdir().unwrap();
    let (bundles, cmp) = cmd_ablate(&tiny(), out.path()).unwrap();
    let algs: Vec<Algorithm> = bundles.iter().map(|b| b.summary.algorithm).collect();
    assert_eq!(algs, fedsr_cli::ABLATION);
    assert!(bundles.iter().all(|b| b.summary.dataset_hash == bundles[0].summary.dataset_hash));
    assert_eq!(cmp.labels[0], "cf_fedsr");
    // variation3 trains exactly like cf_fedsr
    assert_eq!(bundles[0].results[0].rounds, bundles[3].results[0].rounds);
    // variation2 samples like cf_fedsr but weights like fedavg
    let (full, v2) = (&bundles[0].results[0].rounds[0], &bundles[2].results[0].rounds[0]);
    assert_eq!(full.participants, v2.participants);
    assert!(out.path().join("ablation.txt").exists());
}

#[test]
fn single_value_sweep_equals_run() {
    let out = tempfile::tempdir().unwrap();
    let (bundles, _) = cmd_sweep(&tiny(), SweepParam::Dim, &["8".into()], out.path()).unwrap();
    let run = cmd_run(&tiny(), tempfile::tempdir().unwrap().path()).unwrap();
    assert_eq!(bundles[0].summary, run.summary);
    let mut cfg = tiny();
    SweepParam::AlphaBeta.apply(&mut cfg, "0.2:0.8").unwrap();
    assert_eq!((cfg.run.alpha, cfg.run.beta), (0.2, 0.8));
    assert!("lr".parse::<SweepParam>().is_err());
}

fn fedsr(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fedsr")).args(args).current_dir(cwd).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.conf"), "d = 8\nwidth = 3\n").unwrap();
    let bad = fedsr(&["run", "--config", "bad.conf"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));

    fs::write(dir.path().join("tiny.conf"), tiny().to_text()).unwrap();
    let ok = fedsr(&["run", "--config", "tiny.conf", "--out", "res", "--seeds", "1"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let missing = fedsr(&["run", "--set", "data=missing.csv"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    let invalid = fedsr(&["run", "--config", "tiny.conf", "--set", "lr=-1"], dir.path());
    assert_eq!(invalid.status.code(), Some(1));
}
