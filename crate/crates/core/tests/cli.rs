use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bioequiv"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn number(v: &serde_json::Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

#[test]
fn analyze_bundled_sample() {
    let path = data("sample_pk.csv");
    let out = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&out);
    for key in ["gmr", "ci_ratio", "decision", "tost", "summary", "input_sha256", "toolkit_version"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["summary"]["n_t"], 24);
    assert_eq!(report["summary"]["n_r"], 24);
    // ratio-scale CI is exp of the log-scale CI
    for bound in ["lower", "upper"] {
        let log = number(&report["ci_log"][bound]);
        let ratio = number(&report["ci_ratio"][bound]);
        assert!((log.exp() - ratio).abs() <= 1e-15 * ratio);
    }
    let reject = report["tost"]["reject"].as_bool().unwrap();
    let expected = if reject { "bioequivalent" } else { "not bioequivalent" };
    assert_eq!(report["decision"], expected);
}

#[test]
fn analyze_worked_example_is_bioequivalent() {
    let path = data("worked_example.csv");
    let out = run(&["analyze", "--input", path.to_str().unwrap(), "--alpha", "0.05"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&out);
    let s = &report["summary"];
    let diff = number(&s["xbar_t"]) - number(&s["xbar_r"]);
    assert!((diff - 0.05).abs() < 1e-9);
    assert!((number(&s["se_diff"]) - 0.08).abs() < 1e-9);
    assert_eq!(number(&s["df"]), 22.0);
    assert_eq!(report["decision"], "bioequivalent");
}

#[test]
fn analyze_equal_and_minmax_agree() {
    for name in ["sample_pk.csv", "worked_example.csv"] {
        let path = data(name);
        let p = path.to_str().unwrap();
        let decisions: Vec<serde_json::Value> = ["equal", "minmax", "unequal:0.01,0.09"]
            .iter()
            .map(|m| json(&run(&["analyze", "--input", p, "--ci-method", m]))["decision"].clone())
            .collect();
        assert_eq!(decisions[0], decisions[1]);
        assert_eq!(decisions[0], decisions[2]);
    }
}

#[test]
fn analyze_writes_output_file_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let input = data("sample_pk.csv");
    let args = ["analyze", "--input", input.to_str().unwrap(), "--output", target.to_str().unwrap()];
    assert_eq!(run(&args).status.code(), Some(0));
    let first = std::fs::read(&target).unwrap();
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&target).unwrap());
    assert_eq!(first, run(&["analyze", "--input", input.to_str().unwrap()]).stdout);
}

#[test]
fn analyze_validation_errors() {
    let input = data("sample_pk.csv");
    let p = input.to_str().unwrap();
    let out = run(&["analyze", "--input", p, "--limits", "1.2,0.8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("limits must satisfy LO < HI"));
    assert_eq!(run(&["analyze", "--input", p, "--alpha", "0.7"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--input", p, "--ci-method", "wide"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--input", "/nonexistent.csv"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "subject_id,arm,value\n1,T,1.0\n2,T,2.0\n3,R,-1\n4,R,3\n").unwrap();
    let out = run(&["analyze", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "subject_id,arm,value\n").unwrap();
    let out = run(&["analyze", "--input", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty arm"));
}

#[test]
fn power_large_sigma_is_negligible() {
    let out = run(&["power", "--gmr", "1.0", "--sigma", "10", "--n-t", "24", "--n-r", "24"]);
    assert_eq!(out.status.code(), Some(0));
    let p: f64 = stdout(&out).trim().parse().unwrap();
    assert!(p < 1e-6);
}

#[test]
fn power_at_boundary_matches_simulation() {
    let out = run(&["power", "--gmr", "1.25", "--sigma", "0.01", "--n-t", "24", "--n-r", "24"]);
    let p: f64 = stdout(&out).trim().parse().unwrap();
    assert!((p - 0.05).abs() < 0.002);
    let sim = run(&[
        "simulate", "--procedure", "tost", "--mu-t", &1.25f64.ln().to_string(), "--sigma", "0.01",
        "--n-t", "24", "--n-r", "24", "--reps", "200000", "--seed", "42", "--mode", "size",
    ]);
    let rate = number(&json(&sim)["rate"]);
    assert!((rate - 0.05).abs() < 0.002, "{rate}");
    assert!((rate - p).abs() < 0.002);
}

#[test]
fn power_curve_csv() {
    let out = run(&[
        "power", "--gmr", "1.0", "--sigma", "0.25", "--n-t", "20", "--n-r", "20", "--curve", "0.9,1.0,1.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("mu_diff,power"));
    let parsed: Vec<(f64, f64)> = rows
        .map(|r| {
            let (a, b) = r.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(parsed.len(), 3);
    assert!((parsed[0].0 - 0.9f64.ln()).abs() < 1e-15);
    assert!(parsed[1].1 > parsed[0].1 && parsed[1].1 > parsed[2].1);
    assert_eq!(run(&["power", "--gmr", "1", "--sigma", "0.25", "--n-t", "20", "--n-r", "20", "--curve", "x"]).status.code(), Some(2));
}

#[test]
fn samplesize_contract() {
    let out = run(&["samplesize", "--target-power", "0.8", "--gmr", "1.0", "--sigma", "0.25", "--alpha", "0.05"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    let (n_t, n_r) = (r["n_t"].as_u64().unwrap() as usize, r["n_r"].as_u64().unwrap() as usize);
    assert!(number(&r["achieved_power"]) >= 0.8);
    // one fewer per group misses the target
    let p = bioequiv::power::exact_power(&bioequiv::power::PowerParams {
        mu_diff: 0.0,
        n_t: n_t - 1,
        n_r: n_r - 1,
        sigma: 0.25,
        alpha: 0.05,
        limits: Default::default(),
    })
    .unwrap();
    assert!(p < 0.8);

    let out = run(&["samplesize", "--target-power", "0.8", "--gmr", "1.25", "--sigma", "0.25"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!stderr(&out).is_empty());
    let out = run(&["samplesize", "--target-power", "0.99", "--gmr", "1.2", "--sigma", "1.0", "--max-n", "50"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn samplesize_unequal_allocation() {
    let out = run(&["samplesize", "--target-power", "0.8", "--gmr", "1.05", "--sigma", "0.3", "--ratio", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    let (n_t, n_r) = (r["n_t"].as_u64().unwrap(), r["n_r"].as_u64().unwrap());
    assert_eq!(n_t, 2 * n_r);
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate", "--procedure", "tost", "--mu-t", "0", "--mu-r", "0", "--sigma", "0.2", "--n-t", "10",
        "--n-r", "10", "--reps", "1", "--seed", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["replications"], 1);
    assert!(r.get("rate").is_some() && r.get("std_error").is_some());
}

#[test]
fn simulate_modes_and_errors() {
    let base = ["--mu-t", "0.1", "--sigma", "0.3", "--n-t", "24", "--n-r", "24", "--reps", "20000", "--seed", "3"];
    let mut args = vec!["simulate", "--procedure", "ci_minmax", "--mode", "coverage"];
    args.extend_from_slice(&base);
    let r = json(&run(&args));
    assert!((number(&r["rate"]) - 0.95).abs() < 0.01);
    assert_eq!(r["mode"], "coverage");

    let mut bogus = vec!["simulate", "--procedure", "bogus"];
    bogus.extend_from_slice(&base);
    assert_eq!(run(&bogus).status.code(), Some(2));

    let mut no_interval = vec!["simulate", "--procedure", "kv_tost", "--mode", "coverage"];
    no_interval.extend_from_slice(&base);
    assert_eq!(run(&no_interval).status.code(), Some(2));

    let mut zero = vec!["simulate", "--procedure", "tost", "--mu-t", "0", "--sigma", "0.3", "--n-t", "5", "--n-r", "5"];
    zero.extend_from_slice(&["--reps", "0"]);
    assert_eq!(run(&zero).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}
