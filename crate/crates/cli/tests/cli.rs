use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blockdiag::io::{ProblemFile, Report};
use blockdiag::{BlockMatrix, Complex64, DenseMatrix};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_blockdiag"));
    c.env_remove("BLOCKDIAG_DEFAULT_TOL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report(out: &Output) -> Report {
    Report::parse(&String::from_utf8_lossy(&out.stdout)).expect("stdout is a report")
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    v["error"]["kind"].as_str().expect("error kind").to_string()
}

fn write_problem(dir: &Path, name: &str, rows: &[f64], n0: usize) -> PathBuf {
    let n = (rows.len() as f64).sqrt() as usize;
    let m = DenseMatrix::from_row_iterator(n, n, rows.iter().map(|&x| Complex64::new(x, 0.0)));
    let file = ProblemFile::from_block(&BlockMatrix::split(&m, n0).unwrap(), None, BTreeMap::new());
    let path = dir.join(name);
    std::fs::write(&path, file.to_json()).unwrap();
    path
}

fn random_problem(dir: &Path) -> PathBuf {
    let path = dir.join("random.json");
    let out = run(&["random", "--n0", "4", "--n1", "3", "--seed", "11", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn random_then_check_passes() {
    let dir = TempDir::new().unwrap();
    let problem = random_problem(dir.path());
    let out = run(&["check", s(&problem)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&out);
    assert_eq!(r.schema, "blockdiag-report/1");
    assert_eq!(r.command, "check");
    assert!(r.max_residual() <= 1e-10);
    assert!(r.flags["complementary"]);
}

#[test]
fn random_is_deterministic_and_round_trips() {
    let a = run(&["random", "--n0", "3", "--n1", "2", "--seed", "5"]);
    let b = run(&["random", "--n0", "3", "--n1", "2", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let parsed = ProblemFile::parse(&text).unwrap();
    assert_eq!(parsed.to_json(), text.trim_end());
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let problem = random_problem(dir.path());
    let a = report(&run(&["check", s(&problem), "--seed", "3"]));
    let b = report(&run(&["check", s(&problem), "--seed", "3"]));
    assert_eq!(a.residuals, b.residuals);
    assert_eq!(a.spectra, b.spectra);
    assert_eq!(a.inputs_digest, b.inputs_digest);
    let c = report(&run(&["check", s(&problem), "--seed", "4"]));
    assert_ne!(a.inputs_digest, c.inputs_digest);
}

#[test]
fn out_flag_writes_report_file() {
    let dir = TempDir::new().unwrap();
    let problem = random_problem(dir.path());
    let path = dir.path().join("report.json");
    let out = run(&["diagonalize", s(&problem), "--out", s(&path)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let r = Report::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r.command, "diagonalize");
    assert!(r.residuals["left_offdiag"] <= 1e-10);
}

#[test]
fn input_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = run(&["check", s(&dir.path().join("nope.json"))]);
    assert_eq!(code(&missing), 3);
    assert_eq!(error_kind(&missing), "io");

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    let out = run(&["check", s(&garbage)]);
    assert_eq!(code(&out), 3);
    assert_eq!(error_kind(&out), "parse");

    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 3);
    assert_eq!(error_kind(&out), "parse");

    let out = run(&["check", s(&garbage), "--lambda", "1"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn neumann_exit_codes() {
    let dir = TempDir::new().unwrap();
    let problem = write_problem(dir.path(), "analytic.json", &[0.0, 1.0, 1.0, 2.0], 1);
    let ok = run(&["neumann", s(&problem), "--lambda", "1,1"]);
    assert_eq!(code(&ok), 0);
    let certs = report(&ok).certificates.unwrap();
    assert!((certs[0]["norm_v_resolvent"].as_f64().unwrap() - 0.5f64.sqrt()).abs() <= 1e-12);

    assert_eq!(code(&run(&["neumann", s(&problem), "--lambda", "1,0"])), 1);
    let none = run(&["neumann", s(&problem)]);
    assert_eq!(code(&none), 3);
    assert_eq!(error_kind(&none), "contract");
}

#[test]
fn subordinated_hypothesis_failure_exits_2() {
    let dir = TempDir::new().unwrap();
    let good = write_problem(dir.path(), "good.json", &[0.0, 1.0, 1.0, 2.0], 1);
    assert_eq!(code(&run(&["subordinated", s(&good)])), 0);
    let swapped = write_problem(dir.path(), "swapped.json", &[2.0, 1.0, 1.0, 0.0], 1);
    let out = run(&["subordinated", s(&swapped)]);
    assert_eq!(code(&out), 2);
    assert!(!report(&out).flags["subordinated"]);
}

#[test]
fn tolerance_from_environment() {
    let dir = TempDir::new().unwrap();
    let problem = random_problem(dir.path());
    let strict = bin().args(["check", s(&problem)]).env("BLOCKDIAG_DEFAULT_TOL", "1e-30").output().unwrap();
    assert_eq!(code(&strict), 1);
    let bad = bin().args(["check", s(&problem)]).env("BLOCKDIAG_DEFAULT_TOL", "tiny").output().unwrap();
    assert_eq!(code(&bad), 3);
    let flag_wins = bin()
        .args(["check", s(&problem), "--tol", "1e-10"])
        .env("BLOCKDIAG_DEFAULT_TOL", "1e-30")
        .output()
        .unwrap();
    assert_eq!(code(&flag_wins), 0);
}

#[test]
fn riccati_solve_pair_feeds_check() {
    let dir = TempDir::new().unwrap();
    let problem = random_problem(dir.path());
    let data = dir.path().join("data");
    let out = run(&["riccati-solve", s(&problem), "--emit-data", s(&data)]);
    assert_eq!(code(&out), 0);
    assert!(report(&out).flags["agrees_with_spectral"]);
    let pair = data.join("pair.json");
    let out = run(&["check", s(&problem), "--pair", s(&pair)]);
    assert_eq!(code(&out), 0);
    assert!(report(&out).flags["pair_injected"]);

    let zero = dir.path().join("zero.json");
    let text = std::fs::read_to_string(&pair).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["X0", "X1"] {
        for entry in v[key]["data"].as_array_mut().unwrap() {
            *entry = serde_json::json!([0.0, 0.0]);
        }
    }
    std::fs::write(&zero, v.to_string()).unwrap();
    assert_eq!(code(&run(&["check", s(&problem), "--pair", s(&zero)])), 1);
    assert_eq!(code(&run(&["triangularize", s(&problem), "--pair", s(&zero)])), 1);
}

#[test]
fn relbound_emits_sweep() {
    let dir = TempDir::new().unwrap();
    let problem = random_problem(dir.path());
    let data = dir.path().join("data");
    let out = run(&["relbound", s(&problem), "--emit-data", s(&data)]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!(r.scalars["b_star"] >= 0.0);
    let sweep = std::fs::read_to_string(data.join("relbound_sweep.dat")).unwrap();
    assert!(sweep.starts_with("# lambda_re"));
    assert_eq!(sweep.lines().count(), 1 + 33);
}

#[test]
fn dirac_pass_and_hypothesis_failure() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    let out = run(&["dirac", "--n", "8", "--emit-data", s(&data)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&out);
    assert!(r.scalars["margin"] > 0.0);
    assert!(r.flags["backmap_ok"]);
    for f in ["momenta.dat", "block_spectra.dat"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let strong = run(&["dirac", "--n", "8", "--amplitude-kmin", "10"]);
    assert_eq!(code(&strong), 2);
    assert!(report(&strong).scalars["margin"] < 0.0);

    let odd = run(&["dirac", "--n", "7"]);
    assert_eq!(code(&odd), 3);
}
