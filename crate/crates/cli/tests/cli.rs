use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hillvallea_cli::{AggregateRecord, RunRecord, TraceRecord};
use serde::Deserialize;
use tempfile::TempDir;

#[derive(Deserialize)]
struct Document {
    runs: Vec<RunRecord>,
    aggregates: Vec<AggregateRecord>,
}

fn hillvallea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hillvallea"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = hillvallea(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Document {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Vec<T> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn without_wall_time(mut runs: Vec<RunRecord>) -> Vec<RunRecord> {
    for r in &mut runs {
        r.wall_time_ms = 0;
    }
    runs
}

#[test]
fn counts_runs_and_aggregates() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("results.json");
    ok(&[
        "--problems", "1-5,10", "--algo", "amu", "--reps", "3", "--seed", "42", "--budget", "3000", "--out",
        path.to_str().unwrap(),
    ]);
    let doc = read_json(&path);
    assert_eq!(doc.runs.len(), 18);
    assert_eq!(doc.aggregates.len(), 6);
    assert_eq!(
        doc.aggregates.iter().map(|a| a.problem_id).collect::<Vec<_>>(),
        vec![1, 2, 3, 4, 5, 10]
    );
    for a in &doc.aggregates {
        assert_eq!(a.runs, 3);
        let ratios: Vec<f64> = doc
            .runs
            .iter()
            .filter(|r| r.problem_id == a.problem_id)
            .map(|r| r.peak_ratio)
            .collect();
        let mean = ratios.iter().sum::<f64>() / 3.0;
        assert!((a.mean_peak_ratio - mean).abs() < 1e-12);
    }
    let seeds: Vec<u64> = doc.runs.iter().filter(|r| r.problem_id == 4).map(|r| r.seed).collect();
    assert_eq!(seeds, vec![42, 43, 44]);
    for r in &doc.runs {
        assert!(r.evaluations_used <= 3000);
        let phases = r.phase_init + r.phase_hvc + r.phase_lopt;
        assert!((phases - 1.0).abs() < 1e-9, "{phases}");
    }
    assert!(!dir.path().join("results.trace.json").exists());
}

#[test]
fn csv_and_json_hold_the_same_values() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let common = ["--problems", "2,4", "--algo", "amu,cmsa", "--reps", "2", "--budget", "4000", "--trace", "500"];
    ok(&[&common[..], &["--out", json.to_str().unwrap()]].concat());
    ok(&[&common[..], &["--out", csv.to_str().unwrap()]].concat());

    let doc = read_json(&json);
    let runs: Vec<RunRecord> = read_csv(&csv);
    assert_eq!(without_wall_time(runs), without_wall_time(doc.runs));
    let aggregates: Vec<AggregateRecord> = read_csv(&dir.path().join("r.aggregates.csv"));
    assert_eq!(aggregates, doc.aggregates);
    assert_eq!(aggregates.len(), 4);

    let json_trace: Vec<TraceRecord> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.trace.json")).unwrap()).unwrap();
    let csv_trace: Vec<TraceRecord> = read_csv(&dir.path().join("r.trace.csv"));
    assert_eq!(json_trace, csv_trace);

    let header = fs::read_to_string(&csv).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "problem_id,kind,seed,evaluations_used,peak_ratio,n_elites,restarts,phase_init,phase_hvc,phase_lopt,wall_time_ms"
    );
}

#[test]
fn format_flag_overrides_extension() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("out.txt");
    ok(&["--problems", "2", "--budget", "500", "--format", "csv", "--out", path.to_str().unwrap()]);
    let runs: Vec<RunRecord> = read_csv(&path);
    assert_eq!(runs.len(), 1);
}

#[test]
fn long_run_trace_spacing() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p9.json");
    ok(&[
        "--problems", "9", "--algo", "amu", "--budget-multiplier", "50", "--trace", "10000", "--out",
        path.to_str().unwrap(),
    ]);
    let doc = read_json(&path);
    assert_eq!(doc.runs[0].evaluations_used, 20_000_000);
    let trace: Vec<TraceRecord> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("p9.trace.json")).unwrap()).unwrap();
    assert_eq!(trace.len(), 2000);
    assert_eq!(trace.first().unwrap().evaluations, 10_000);
    assert_eq!(trace.last().unwrap().evaluations, 20_000_000);
    for w in trace.windows(2) {
        let gap = w[1].evaluations - w[0].evaluations;
        assert!(gap > 0 && gap <= 10_000);
        assert!(w[1].peak_ratio >= 0.0 && w[1].peak_ratio <= 1.0);
    }
    assert_eq!(trace.last().unwrap().peak_ratio, doc.runs[0].peak_ratio);
}

#[test]
fn stdout_json_when_no_output_path() {
    let out = ok(&["--problems", "4", "--budget", "1000", "--reps", "2"]);
    let doc: Document = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.runs.len(), 2);
    assert_eq!(doc.aggregates.len(), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem  4 amu"));
}

#[test]
fn injection_modes_run_side_by_side() {
    let dir = TempDir::new().unwrap();
    for mode in ["all", "global", "none"] {
        let path = dir.path().join(format!("{mode}.json"));
        ok(&[
            "--problems", "6", "--injection", mode, "--budget", "20000", "--reps", "2", "--out",
            path.to_str().unwrap(),
        ]);
        let doc = read_json(&path);
        assert_eq!(doc.runs.len(), 2);
        assert!(doc.runs.iter().all(|r| r.evaluations_used == 20000));
    }
}

#[test]
fn config_file_reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("sweep.cfg");
    fs::write(
        &config,
        "# sweep\nproblems = 1,4,7\nalgo = iamu\nreps = 2\nseed = 7\nbudget = 5000\ncluster-size-growth = 1.5\n",
    )
    .unwrap();
    let mut docs = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        ok(&["--config", config.to_str().unwrap(), "--jobs", "2", "--out", path.to_str().unwrap()]);
        docs.push(read_json(&path));
    }
    let b = docs.pop().unwrap();
    let a = docs.pop().unwrap();
    assert_eq!(a.runs.len(), 6);
    assert!(a.runs.iter().all(|r| r.kind == "iamu"));
    assert_eq!(a.aggregates, b.aggregates);
    assert_eq!(without_wall_time(a.runs), without_wall_time(b.runs));
}

#[test]
fn invalid_input_fails_with_a_diagnostic() {
    let dir = TempDir::new().unwrap();
    let bad_config = dir.path().join("bad.cfg");
    fs::write(&bad_config, "no_such_constant = 3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--problems", "11"],
        vec!["--problems", "0"],
        vec!["--problems", "5-2"],
        vec!["--algo", "cmaes"],
        vec!["--reps", "0"],
        vec!["--budget-multiplier", "-1"],
        vec!["--budget", "0"],
        vec!["--epsilon", "0"],
        vec!["--injection", "some"],
        vec!["--format", "csv"],
        vec!["--jobs", "0"],
        vec!["--reps", "two"],
        vec!["--no-such-flag"],
        vec!["--config", bad_config.to_str().unwrap()],
        vec!["--config", "/nonexistent/sweep.cfg"],
    ];
    for args in cases {
        let out = hillvallea(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
        assert!(!out.stderr.is_empty(), "{args:?} gave no diagnostic");
    }
}
