use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CSV_HEADER: &str = "k,gamma,theta,lambda,fix_res,consensus,objective,rel_err_x,rel_err_f,sweeps";

fn relsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relsplit")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_RUN: &str = r#"{
    "graph": {"kind": "sequential", "n": 2},
    "problem": {"type": "lasso", "q": 30, "d": 20, "seed": 5, "spectrum": {"sigma_min": 0.5, "sigma_max": 1.0}},
    "schedule": {"type": "safeguard", "rule": "harmonic", "gamma0": {"per_beta": 1.0}},
    "run": {"max_iters": 5000, "fix_res_tol": 1e-9, "reference": true}
}"#;

#[test]
fn validate_reports_each_condition() {
    let ok = relsplit(&["validate", configs().join("dy_scheme.json").to_str().unwrap()]);
    assert_eq!(code(&ok), 0);
    let text = stdout(&ok);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);

    let bad = relsplit(&["validate", configs().join("bad_scheme.json").to_str().unwrap()]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).lines().any(|l| l.starts_with("FAIL (c)")));
}

#[test]
fn graph_configs_validate() {
    let dir = TempDir::new().unwrap();
    for kind in ["inward-star", "outward-star", "sequential"] {
        let cfg = write(&dir, "g.json", &format!(r#"{{"graph": {{"kind": "{kind}", "n": 5}}}}"#));
        assert_eq!(code(&relsplit(&["validate", &cfg])), 0, "{kind}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&relsplit(&["validate", "/nonexistent/config.json"])), 2);
    let broken = write(&dir, "broken.json", "{\"scheme\": ");
    assert_eq!(code(&relsplit(&["validate", &broken])), 2);
    let unknown = write(&dir, "unknown.json", r#"{"graph": {"kind": "sequential", "n": 3}, "colour": 1}"#);
    assert_eq!(code(&relsplit(&["validate", &unknown])), 2);
    let mismatched = write(
        &dir,
        "mismatch.json",
        r#"{"graph": {"kind": "sequential", "n": 3},
            "problem": {"type": "lasso", "q": 5, "d": 3, "seed": 1},
            "schedule": {"type": "constant", "gamma": 0.1}}"#,
    );
    assert_eq!(code(&relsplit(&["run", &mismatched])), 2);
    assert_eq!(code(&relsplit(&["bench", "/nonexistent/spec.json"])), 2);
}

#[test]
fn run_writes_deterministic_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "run.json", SMALL_RUN);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = relsplit(&["run", &cfg, "--out", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("status      converged"));
    assert_eq!(code(&relsplit(&["run", &cfg, "--out", b.to_str().unwrap()])), 0);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() > 1 && rows.len() < 5001);
    assert!(rows.iter().all(|r| r.len() == 10));
    let last: f64 = rows.last().unwrap()[4].parse().unwrap();
    assert!(last <= 1e-9);
    let err_f: f64 = rows.last().unwrap()[8].parse().unwrap();
    assert!(err_f < 1e-6);
}

#[test]
fn run_without_out_prints_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "run.json", SMALL_RUN);
    let out = relsplit(&["run", &cfg]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().next(), Some(CSV_HEADER));
    assert!(String::from_utf8(out.stderr).unwrap().contains("iterations"));
}

#[test]
fn aborted_run_keeps_partial_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "abort.json",
        r#"{"graph": {"kind": "inward-star", "n": 3},
            "problem": {"type": "elastic_net", "q": 20, "d": 10, "seed": 2},
            "schedule": {"type": "constant", "gamma": {"per_beta": 1.99}},
            "run": {"max_iters": 100}}"#,
    );
    let csv = dir.path().join("t.csv");
    let out = relsplit(&["run", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("aborted"));
    assert!(fs::read_to_string(&csv).unwrap().starts_with(CSV_HEADER));
}

fn bench_spec(dir: &TempDir, problem: &str, graphs: &str, budget: usize) -> (String, PathBuf) {
    let out = dir.path().join("out");
    let text = format!(
        r#"{{"problem": {problem}, "graphs": {graphs}, "budget": {budget}, "record_every": 5, "out_dir": "{}"}}"#,
        out.to_str().unwrap()
    );
    (write(dir, "bench.json", &text), out)
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn lasso_bench_writes_one_trace_per_method() {
    let dir = TempDir::new().unwrap();
    let problem = r#"{"type": "lasso", "q": 30, "d": 20, "seed": 3, "spectrum": {"sigma_min": 0.5, "sigma_max": 1.0}}"#;
    let (spec, out) = bench_spec(&dir, problem, "[]", 3000);
    let run = relsplit(&["bench", &spec]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let files = csv_files(&out);
    assert_eq!(files.len(), 7);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("graph,method,status,iterations,rel_err_x,rel_err_f,iters_to_1e-6,sweeps")
    );
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8);
        if f[2] == "converged" {
            assert!(f[5].parse::<f64>().unwrap() < 1.0, "{line}");
        }
    }
}

#[test]
fn bench_output_ignores_thread_count() {
    let problem = r#"{"type": "elastic_net", "q": 20, "d": 12, "seed": 4, "n_corr": 2}"#;
    let graphs = r#"[{"kind": "inward-star", "n": 3}, {"kind": "outward-star", "n": 3}, {"kind": "sequential", "n": 3}]"#;
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = TempDir::new().unwrap();
        let (spec, out) = bench_spec(&dir, problem, graphs, 400);
        let run = Command::new(env!("CARGO_BIN_EXE_relsplit"))
            .args(["bench", &spec])
            .env("REL_SPLIT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&run), 0);
        let files = csv_files(&out);
        assert_eq!(files.len(), 3 * 6 + 1);
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
        outputs.push((files, bytes));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn proptest_suites() {
    for suite in ["resolvent-identity", "relocator-axioms", "lipschitz", "recycling", "scheme-validity", "pinv-closed-forms"] {
        let out = relsplit(&["proptest", suite, "--trials", "50", "--seed", "11"]);
        assert_eq!(code(&out), 0, "{suite}: {}", stdout(&out));
        assert!(stdout(&out).starts_with("PASS"));
    }
    assert_eq!(code(&relsplit(&["proptest", "resolvent-identity", "--trials", "1000"])), 0);
    assert_eq!(code(&relsplit(&["proptest", "no-such-suite"])), 2);
}
