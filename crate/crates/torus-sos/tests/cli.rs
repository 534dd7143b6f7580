//! End-to-end tests of the binary: pipelines, determinism, exit codes, and
//! the auditing loop on serialized artifacts.

use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64;
use torus_sos::{MultiIndex, TrigPoly};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_torus-sos")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary spawns")
}

fn assert_code(out: &Output, want: i32) {
    let got = out.status.code().expect("exit code");
    assert_eq!(
        got,
        want,
        "exit {got}, expected {want}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("file exists")).expect("valid json")
}

/// `(1 + cos 2 pi x)^2`: nonnegative, exactly representable, minimum 0 at 1/2.
fn exact_square_objective(dir: &Path) {
    let c = TrigPoly::from_coeffs(
        1,
        [
            (MultiIndex::from_slice(&[0]), Complex64::new(1.0, 0.0)),
            (MultiIndex::from_slice(&[1]), Complex64::new(0.5, 0.0)),
            (MultiIndex::from_slice(&[-1]), Complex64::new(0.5, 0.0)),
        ],
    )
    .unwrap();
    let f = c.product(&c).unwrap();
    std::fs::write(
        dir.join("square.json"),
        serde_json::to_string_pretty(&f.to_json()).unwrap(),
    )
    .unwrap();
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--dim", "1", "--bandwidth", "6", "--seed", "42", "--out", "f.json"];
    assert_code(&run_in(dir.path(), &args), 0);
    let first = std::fs::read(dir.path().join("f.json")).unwrap();

    assert_code(&run_in(dir.path(), &args), 0);
    let second = std::fs::read(dir.path().join("f.json")).unwrap();
    assert_eq!(first, second, "same seed, same bytes");

    let mut other = args;
    other[6] = "43";
    assert_code(&run_in(dir.path(), &other), 0);
    let third = std::fs::read(dir.path().join("f.json")).unwrap();
    assert_ne!(first, third, "different seed, different draw");

    let f = TrigPoly::from_json(&read_json(&dir.path().join("f.json"))).unwrap();
    assert_eq!(f.dim(), 1);
    assert_eq!(f.bandwidth(), 6);
}

#[test]
fn solve_then_certify_reproduces_the_bounds() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen", "--seed", "7", "--bandwidth", "5", "--out", "f.json"]), 0);
    assert_code(
        &run_in(
            dir.path(),
            &["solve", "--objective", "f.json", "--seed", "3", "--iters", "400"],
        ),
        0,
    );
    let solved = read_json(&dir.path().join("report.json"));

    assert_code(
        &run_in(
            dir.path(),
            &[
                "certify",
                "--objective",
                "f.json",
                "--model",
                "model.json",
                "--seed",
                "3",
                "--report-out",
                "recheck.json",
            ],
        ),
        0,
    );
    let rechecked = read_json(&dir.path().join("recheck.json"));

    // independent recomputation from the serialized model: bitwise-equal bounds
    assert_eq!(solved["lower"], rechecked["lower"]);
    assert_eq!(solved["upper"], rechecked["upper"]);
    assert_eq!(solved["det"]["model_tail"], rechecked["det"]["model_tail"]);
    assert_ne!(
        solved["provenance"]["config_hash"], rechecked["provenance"]["config_hash"],
        "different subcommands hash differently"
    );
}

#[test]
fn equal_configs_emit_byte_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert_code(&run_in(dir, &["gen", "--seed", "9", "--bandwidth", "4", "--out", "f.json"]), 0);
        assert_code(
            &run_in(
                dir,
                &["solve", "--objective", "f.json", "--seed", "5", "--iters", "300", "--draws", "64"],
            ),
            0,
        );
    }
    let ra = std::fs::read(a.path().join("report.json")).unwrap();
    let rb = std::fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ra, rb, "equal resolved configs must serialize identically");
}

#[test]
fn tolerance_controls_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen", "--seed", "1", "--bandwidth", "5", "--out", "f.json"]), 0);
    let base = ["solve", "--objective", "f.json", "--seed", "2", "--iters", "200"];

    let mut generous = base.to_vec();
    generous.extend(["--tolerance", "10.0"]);
    let out = run_in(dir.path(), &generous);
    assert_code(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("certified"));

    let mut strict = base.to_vec();
    strict.extend(["--tolerance", "1e-12", "--report-out", "strict.json"]);
    let out = run_in(dir.path(), &strict);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("tolerance unmet"));
    assert!(dir.path().join("strict.json").exists(), "report written despite exit 2");
}

#[test]
fn tampered_models_are_rejected_on_load() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen", "--seed", "4", "--bandwidth", "4", "--out", "f.json"]), 0);
    // sga writes a dense parameter matrix we can corrupt entry-wise
    assert_code(
        &run_in(dir.path(), &["solve", "--objective", "f.json", "--seed", "4", "--iters", "100"]),
        0,
    );
    let mut model = read_json(&dir.path().join("model.json"));
    model["a"][0][0]["re"] = serde_json::json!(-0.5);
    std::fs::write(dir.path().join("bad.json"), serde_json::to_string(&model).unwrap()).unwrap();

    let out = run_in(
        dir.path(),
        &["certify", "--objective", "f.json", "--model", "bad.json", "--seed", "4"],
    );
    assert_code(&out, 1);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("PSD"),
        "rejection names the eigenvalue check"
    );
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen", "--seed", "6", "--bandwidth", "4", "--out", "f.json"]), 0);
    std::fs::write(
        dir.path().join("run.json"),
        r#"{ "seed": 6, "objective": "f.json", "iters": 50, "trace_out": "trace.csv" }"#,
    )
    .unwrap();
    assert_code(&run_in(dir.path(), &["solve", "--config", "run.json", "--iters", "10"]), 0);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 11, "header + one row per iteration");
    assert_eq!(trace.lines().next().unwrap(), "iter,objective_estimate,grad_norm");
}

#[test]
fn missing_seed_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "--dim", "1"]);
    assert_code(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed is required"));
}

#[test]
fn oracle_grid_min_locates_a_known_minimum() {
    let dir = tempfile::tempdir().unwrap();
    exact_square_objective(dir.path());
    let out = run_in(
        dir.path(),
        &["oracle", "grid-min", "--file", "square.json", "--points", "512", "--out", "gm.json"],
    );
    assert_code(&out, 0);
    let gm = read_json(&dir.path().join("gm.json"));
    // 512 is even, so the grid hits the true minimizer x = 1/2 exactly
    assert!(gm["value"].as_f64().unwrap().abs() < 1e-12);
    assert!((gm["argmin"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(gm["slack"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_audits_pass_on_solver_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen", "--seed", "8", "--bandwidth", "4", "--out", "f.json"]), 0);
    assert_code(
        &run_in(
            dir.path(),
            &[
                "solve", "--objective", "f.json", "--seed", "8", "--iters", "150",
                "--map", "kernel", "--n", "6", "--rho", "0.5", "--map-out", "map.json",
            ],
        ),
        0,
    );

    let out = run_in(
        dir.path(),
        &["oracle", "mk", "--map", "map.json", "--k", "-2", "--out", "mk.json"],
    );
    assert_code(&out, 0);
    let mk = read_json(&dir.path().join("mk.json"));
    assert!(mk["max_entry_diff"].as_f64().unwrap() < 1e-8);

    let out = run_in(
        dir.path(),
        &["oracle", "coeffs", "--model", "model.json", "--radius", "8", "--out", "c.json"],
    );
    assert_code(&out, 0);
    let c = read_json(&dir.path().join("c.json"));
    assert!(c["max_diff"].as_f64().unwrap() < 1e-8);
    assert_eq!(c["aliasing_suspected"], false);
}

#[test]
fn probabilistic_bound_appears_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    assert_code(&run_in(dir.path(), &["gen", "--seed", "12", "--bandwidth", "4", "--out", "f.json"]), 0);
    assert_code(
        &run_in(
            dir.path(),
            &["solve", "--objective", "f.json", "--seed", "12", "--iters", "200", "--draws", "100"],
        ),
        0,
    );
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["prob"]["draws"], 100);
    assert!(report["prob"]["value"].as_f64().unwrap() <= report["upper"].as_f64().unwrap());
    assert!(report["provenance"]["sampling_support"].as_u64().is_some());

    // residual rows accompany the report on request and follow the pinned header
    assert_code(
        &run_in(
            dir.path(),
            &[
                "certify", "--objective", "f.json", "--model", "model.json", "--seed", "12",
                "--residuals-out", "residuals.csv",
            ],
        ),
        0,
    );
    let csv = std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k_degree,|f_hat|,|g_hat|,residual");
    assert!(csv.lines().count() > 3);
}

#[test]
fn embed_timing_is_the_only_nondeterministic_field() {
    let dir = tempfile::tempdir().unwrap();
    exact_square_objective(dir.path());
    let args = [
        "certify", "--objective", "square.json", "--model", "model.json", "--seed", "1",
    ];
    // build a model first
    assert_code(
        &run_in(
            dir.path(),
            &["solve", "--objective", "square.json", "--seed", "1", "--iters", "50", "--degree", "1"],
        ),
        0,
    );
    let mut timed = args.to_vec();
    timed.extend(["--embed-timing", "--report-out", "timed.json"]);
    assert_code(&run_in(dir.path(), &timed), 0);
    let report = read_json(&dir.path().join("timed.json"));
    assert!(report["provenance"]["wall_seconds"].as_f64().unwrap() >= 0.0);

    assert_code(&run_in(dir.path(), &args), 0);
    let plain = read_json(&dir.path().join("report.json"));
    assert!(plain["provenance"].get("wall_seconds").is_none());
}
