use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use regevo::config::search_to_toml;
use regevo::manifest::RunManifest;
use regevo::{SchedulingMode, SearchConfig};

fn regevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regevo"))
        .args(args)
        .env_remove("REGEVO_OUT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = regevo(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_into(dir: &Path, extra: &[&str]) -> String {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--out", out];
    args.extend_from_slice(extra);
    ok(&args);
    fs::read_to_string(dir.join("trace.jsonl")).unwrap()
}

#[test]
fn default_run_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_into(&tmp.path().join("a"), &["--seed", "3"]);
    let b = run_into(&tmp.path().join("b"), &["--seed", "3"]);
    let c = run_into(&tmp.path().join("c"), &["--seed", "4"]);
    assert_eq!(a.lines().count(), 1000);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let manifest = RunManifest::read(tmp.path().join("a/manifest.json")).unwrap();
    assert_eq!(manifest.command, "run");
    assert_eq!(manifest.seed, Some(3));
    assert_eq!(manifest.outputs, vec!["trace.jsonl".to_string()]);
}

#[test]
fn quanta_of_one_matches_continuous() {
    let tmp = tempfile::tempdir().unwrap();
    let config = SearchConfig {
        scheduling: SchedulingMode::Quanta { wait_for: 1 },
        total_candidates: 300,
        ..SearchConfig::default()
    };
    let quanta = tmp.path().join("quanta.toml");
    fs::write(&quanta, search_to_toml(&config)).unwrap();
    let continuous = tmp.path().join("continuous.toml");
    let config = SearchConfig {
        scheduling: SchedulingMode::Continuous,
        ..config
    };
    fs::write(&continuous, search_to_toml(&config)).unwrap();
    let a = run_into(
        &tmp.path().join("q"),
        &["--search", quanta.to_str().unwrap()],
    );
    let b = run_into(
        &tmp.path().join("c"),
        &["--search", continuous.to_str().unwrap()],
    );
    assert_eq!(a.lines().count(), 300);
    assert_eq!(a, b);
}

#[test]
fn bad_config_field_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("search.toml");
    let text = search_to_toml(&SearchConfig::default()).replace("num_workers", "num_wrokers");
    fs::write(&path, text).unwrap();
    let out_dir = tmp.path().join("out");
    let out = regevo(&[
        "run",
        "--search",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("num_wrokers"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn analyze_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    run_into(&run_dir, &["--seed", "5"]);
    let trace = run_dir.join("trace.jsonl");
    let out = tmp.path().join("analysis");

    let started = Instant::now();
    ok(&[
        "analyze",
        trace.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(started.elapsed().as_secs_f64() < 10.0);
    for name in [
        "trie.dot",
        "histograms.csv",
        "tiers.csv",
        "quality.csv",
        "steps.csv",
        "donors.csv",
        "locality_runs.csv",
        "locality_buckets.csv",
        "manifest.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }

    // cumulative max never decreases
    let quality = fs::read_to_string(out.join("quality.csv")).unwrap();
    let mut lines = quality.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "cumulative_max").unwrap();
    let maxima: Vec<f64> = lines
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    assert_eq!(maxima.len(), 1000);
    assert!(maxima.windows(2).all(|w| w[0] <= w[1]));

    // every labelled trie node is at or above the threshold
    let dot = fs::read_to_string(out.join("trie.dot")).unwrap();
    let mut nodes = 0;
    for line in dot.lines().filter(|l| l.contains("%)")) {
        let pct = line.split('(').nth(1).unwrap().split('%').next().unwrap();
        assert!(pct.parse::<f64>().unwrap() >= 1.0, "{line}");
        nodes += 1;
    }
    assert!(nodes > 0);
}

#[test]
fn locality_without_transfers_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let config = SearchConfig {
        transfer_enabled: false,
        total_candidates: 200,
        ..SearchConfig::default()
    };
    let search = tmp.path().join("search.toml");
    fs::write(&search, search_to_toml(&config)).unwrap();
    let run_dir = tmp.path().join("run");
    run_into(&run_dir, &["--search", search.to_str().unwrap()]);
    let out = tmp.path().join("analysis");
    let res = regevo(&[
        "analyze",
        run_dir.join("trace.jsonl").to_str().unwrap(),
        "--locality",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("no transfers"));
    assert!(!out.exists());

    // the full analysis still works and skips the transfer reports
    ok(&[
        "analyze",
        run_dir.join("trace.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(out.join("quality.csv").exists());
    assert!(!out.join("donors.csv").exists());
}

#[test]
fn prob_values() {
    let line = ok(&[
        "prob",
        "transfer-bound",
        "--P",
        "100",
        "--rank",
        "96",
        "--s",
        "5",
    ]);
    let value: f64 = line.rsplit(": ").next().unwrap().trim().parse().unwrap();
    assert!((value - 0.811875).abs() < 1e-3, "{line}");

    let line = ok(&["prob", "evals-until-donor", "--P", "100", "--s", "5"]);
    assert_eq!(line.trim(), "evals-until-donor P=100 s=5: 20");

    let line = ok(&[
        "prob",
        "delay-bound",
        "--swait",
        "25",
        "--w",
        "25",
        "--mu",
        "60",
        "--sigma",
        "10",
    ]);
    assert!(line.trim().ends_with(": 0"), "{line}");

    let line = ok(&[
        "prob",
        "hypergeom",
        "--N",
        "10",
        "--K",
        "3",
        "--n",
        "2",
        "--k",
        "1",
    ]);
    assert!(line.contains("(7/15)"), "{line}");

    let line = ok(&["prob", "order-stat", "--r", "1", "--w", "1"]);
    assert!(line.trim().ends_with(": 0"), "{line}");

    let res = regevo(&[
        "prob",
        "transfer-bound",
        "--P",
        "10",
        "--rank",
        "11",
        "--s",
        "5",
    ]);
    assert!(!res.status.success());
}

#[test]
fn cache_sim_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    run_into(&run_dir, &["--seed", "8"]);
    let out = tmp.path().join("cache");
    ok(&[
        "cache-sim",
        run_dir.join("trace.jsonl").to_str().unwrap(),
        "--policy",
        "store-all",
        "--policy",
        "skip-bottom",
        "--policy",
        "tier:5:100",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = fs::read_to_string(out.join("cache_report.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let (all, skip) = (&rows[0], &rows[1]);
    assert_eq!(all[0], "store-all");
    assert_eq!(all[4], "0");
    assert_eq!(skip[0], "skip-bottom");
    assert_eq!(skip[4], "0");
    let stores = |r: &Vec<&str>| r[1].parse::<u64>().unwrap();
    assert!(stores(skip) < stores(all));
    assert_eq!(rows[2][0], "tier:5:100");
    assert!(out.join("cache_summary.txt").exists());
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_regevo"))
        .args(["run", "--seed", "1"])
        .env("REGEVO_OUT", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("trace.jsonl").exists());
    assert!(dir.join("manifest.json").exists());
}
