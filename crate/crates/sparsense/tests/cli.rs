use std::path::Path;
use std::process::Command;

use sparsense::config::{self, ConfigError, GatherFile, PhaseTransitionFile, SenseSweepFile};
use sparsense::run;
use sparsense_core::pipeline::{sweep, NoClock, SensingStrategy};

const MINIMAL_SWEEP: &str = r#"{
  "blocks": [{"bands": 8, "p": 0.1}, {"bands": 8, "p": 0.4}],
  "m_over_n": [0.5],
  "strategies": ["conventional_l1", "weighted_l1_expected"],
  "trials": 3
}"#;

fn sparsense(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sparsense")).args(args).output().unwrap()
}

#[test]
fn minimal_config_takes_defaults() {
    let file: SenseSweepFile = config::parse(MINIMAL_SWEEP).unwrap();
    let cfg = file.build(None).unwrap();
    assert_eq!(cfg.model.n(), 16);
    assert_eq!(cfg.noise_std, 0.0);
    assert_eq!(cfg.master_seed, 0);
    assert_eq!(cfg.history_length, 0);
    assert_eq!(cfg.recovery.lambda, 0.05);
    assert_eq!(cfg.strategies, vec![SensingStrategy::ConventionalL1, SensingStrategy::WeightedExpected]);
    assert_eq!(file.build(Some(77)).unwrap().master_seed, 77);
}

#[test]
fn out_of_range_ratio_names_the_key() {
    let text = MINIMAL_SWEEP.replace("[0.5]", "[0.5, 1.5]");
    let err = config::parse::<SenseSweepFile>(&text).unwrap().build(None).unwrap_err();
    match err {
        ConfigError::Invalid { key, .. } => assert_eq!(key, "m_over_n[1]"),
        other => panic!("{other}"),
    }
}

#[test]
fn unknown_key_is_rejected_with_path() {
    let text = MINIMAL_SWEEP.replace("\"trials\": 3", "\"trials\": 3, \"foo\": 1");
    let err = config::parse::<SenseSweepFile>(&text).unwrap_err();
    assert!(err.to_string().contains("foo"), "{err}");
    let nested = MINIMAL_SWEEP.replace("\"p\": 0.4", "\"p\": 0.4, \"colour\": 2");
    let err = config::parse::<SenseSweepFile>(&nested).unwrap_err();
    match err {
        ConfigError::Parse { key, .. } => assert!(key.starts_with("blocks[1]"), "{key}"),
        other => panic!("{other}"),
    }
}

#[test]
fn history_strategies_need_history() {
    let text = MINIMAL_SWEEP.replace("\"weighted_l1_expected\"", "\"weighted_l1_predicted:ar1\"");
    let err = config::parse::<SenseSweepFile>(&text).unwrap().build(None).unwrap_err();
    assert!(err.to_string().contains("history_length"), "{err}");
}

#[test]
fn other_configs_validate_ranges() {
    let pt: PhaseTransitionFile = config::parse(r#"{"n": 16, "k_grid": [2, 9]}"#).unwrap();
    assert!(pt.build(None).unwrap_err().to_string().contains("k_grid[1]"));
    let g: GatherFile = config::parse(r#"{"nodes": 8, "pull_count": 9, "updaters": 1, "rounds": 1}"#).unwrap();
    assert!(g.build(None).unwrap_err().to_string().contains("pull_count"));
}

#[test]
fn parallel_sweep_matches_sequential() {
    let text = MINIMAL_SWEEP.replace("\"trials\": 3", "\"trials\": 5, \"snr_db\": 12");
    let cfg = config::parse::<SenseSweepFile>(&text).unwrap().build(None).unwrap();
    assert_eq!(run::sweep(&cfg, 2, false).unwrap(), sweep(&cfg, &NoClock).unwrap());
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sense_sweep_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", MINIMAL_SWEEP);
    let out = dir.path().join("s.csv");
    let o = sparsense(&["sense-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let detail = std::fs::read_to_string(&out).unwrap();
    let mut lines = detail.lines();
    assert_eq!(lines.next().unwrap(), "strategy,m_over_n,trial,miss_detection,false_alarm,nmse,wall_time_s");
    assert_eq!(lines.count(), 6);
    assert!(!detail.contains('\r'));
    let agg = std::fs::read_to_string(dir.path().join("s.aggregate.csv")).unwrap();
    assert_eq!(agg.lines().next().unwrap(), "strategy,m_over_n,mean_miss,se_miss,mean_fa,se_fa");
    assert_eq!(agg.lines().count(), 3);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &MINIMAL_SWEEP.replace("\"trials\": 3", "\"trials\": 3, \"snr_db\": 5"));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(sparsense(&["sense-sweep", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "1"]).status.success());
    assert!(sparsense(&["sense-sweep", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "2"]).status.success());
    assert_ne!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn every_command_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases = [
        ("phase-transition", r#"{"n": 32, "k_grid": [1, 2, 4], "trials": 10}"#, "k,m_star,fit_c,fit_r2", 3),
        (
            "gather-sim",
            r#"{"nodes": 32, "pull_count": 16, "updaters": 2, "rounds": 3, "modes": ["clique", "aggregation"], "network_nodes": 4}"#,
            "mode,N,m,p,exact_recovery,bs_connections,d2d_multicasts,network_node_transmissions,sink_transmissions",
            6,
        ),
        ("ar-gather", r#"{"nodes": 32, "pull_count": 12, "alpha": 0.9, "rounds": 4}"#, "round,nmse,exact_innovation,sink_transmissions", 4),
        ("adaptive-demo", r#"{"n": 64, "k": 3, "m0": 8, "trials": 4}"#, "trial,k,k_hat,m0,m_final,exact_m0,exact_final", 4),
    ];
    for (cmd, text, header, rows) in cases {
        let cfg = write(d, &format!("{cmd}.json"), text);
        let out = d.join(format!("{cmd}.csv"));
        let o = sparsense(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(&out).unwrap();
        assert_eq!(csv.lines().next().unwrap(), header);
        assert_eq!(csv.lines().count(), rows + 1, "{cmd}");
    }
    let gather = std::fs::read_to_string(d.join("gather-sim.csv")).unwrap();
    let first = gather.lines().nth(1).unwrap();
    assert_eq!(first, "clique,32,16,2,1,16,2,0,0");
    assert!(gather.lines().last().unwrap().ends_with(",0,0,6,0"));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &MINIMAL_SWEEP.replace("[0.5]", "[1.5]"));
    let o = sparsense(&["sense-sweep", "--config", &bad, "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("m_over_n[0]"), "{err}");
    assert!(!dir.path().join("x.csv").exists());

    let good = write(dir.path(), "good.json", MINIMAL_SWEEP);
    let o = sparsense(&["sense-sweep", "--config", &good, "--out", "/nonexistent-dir/x.csv"]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("/nonexistent-dir/x.csv"));
}
