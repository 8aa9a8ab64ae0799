use std::path::Path;
use std::process::{Command, Output};

use fcls_core::io::{load_edge_vector, save_column, save_edge_vector, save_matrix};
use fcls_core::EdgeVector;
use fcls_simbench::data::Observations;
use fcls_simbench::{generate_dataset, Family, SimScenario};

fn fcls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcls"))
        .args(args)
        .env_remove("FCLS_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_sequence(dir: &Path) {
    let mut s = SimScenario::new(Family::GaussianSeq, vec![3, 3]);
    s.noise_sigma = Some(0.5);
    let ds = generate_dataset(&s, 30, 0).unwrap();
    let Observations::Sequence(samples) = &ds.observations else { unreachable!() };
    save_matrix(&dir.join("samples.csv"), samples.samples()).unwrap();
    save_edge_vector(&dir.join("bok.csv"), &EdgeVector::new(6, ds.b_ok().unwrap().clone()).unwrap()).unwrap();
}

fn write_linear(dir: &Path) {
    let s = SimScenario::new(Family::Linear, vec![3, 3]);
    let ds = generate_dataset(&s, 120, 0).unwrap();
    let Observations::Linear(m) = &ds.observations else { unreachable!() };
    save_matrix(&dir.join("x.csv"), &m.x().to_owned()).unwrap();
    save_column(&dir.join("y.csv"), &m.y().to_owned()).unwrap();
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn fit_shrinkage_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_sequence(dir.path());
    let out = dir.path().join("out");
    let bok = dir.path().join("bok.csv");
    let o = fcls(&[
        "fit", "--model", "shrinkage", "--bok", p(&bok), "--penalty", "scad", "--a", "2.1", "--tau", "0.5",
        "--init", "hard-cv", "--steps", "2", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&out), ["beta.csv", "trace.csv", "trace.json"]);
    let beta: EdgeVector<f64> = load_edge_vector(&out.join("beta.csv")).unwrap();
    assert_eq!(beta.d(), 6);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(sidecar["steps_taken"], 2);
    assert_eq!(sidecar["tau"], 0.5);
    // Without raw samples the CV initializer falls back to the raw estimate.
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(sidecar["init"]["note"].is_string());
}

#[test]
fn fit_with_samples_and_auto_tau_reports_tau_max() {
    let dir = tempfile::tempdir().unwrap();
    write_sequence(dir.path());
    let out = dir.path().join("out");
    let samples = dir.path().join("samples.csv");
    let o = fcls(&["fit", "--model", "shrinkage", "--samples", p(&samples), "--tau", "auto", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    let tau_max = sidecar["tau_max"].as_f64().unwrap();
    assert_eq!(sidecar["tau"].as_f64().unwrap(), tau_max);
    assert!(sidecar["init"]["gamma"].is_number());
    // At tau_max the first step already kills everything.
    let beta: EdgeVector<f64> = load_edge_vector(&out.join("beta.csv")).unwrap();
    assert!(beta.is_zero());
}

#[test]
fn fit_linear_and_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_linear(dir.path());
    let (x, y) = (dir.path().join("x.csv"), dir.path().join("y.csv"));
    let out = dir.path().join("out");
    let o = fcls(&[
        "fit", "--model", "linear", "--x", p(&x), "--y", p(&y), "--tau", "0.3", "--init", "lasso-cv", "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let missing = dir.path().join("none");
    let o = fcls(&["fit", "--model", "linear", "--x", p(&x), "--tau", "0.3", "--out", p(&missing)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--y"));
    assert!(!missing.exists());

    std::fs::write(dir.path().join("bad.csv"), "d=3\n1.0\nabc\n2.0\n").unwrap();
    let bad = dir.path().join("bad.csv");
    let o = fcls(&["fit", "--model", "shrinkage", "--bok", p(&bad), "--tau", "1", "--out", p(&missing)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = fcls(&["fit", "--model", "shrinkage", "--tau", "1", "--out", p(&missing)]);
    assert_eq!(code(&o), 1);
    let o = fcls(&["fit", "--model", "linear", "--x", p(&x), "--y", p(&y), "--tau", "-1", "--out", p(&missing)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    write_linear(dir.path());
    let (x, y) = (dir.path().join("x.csv"), dir.path().join("y.csv"));
    let out = dir.path().join("out");
    let o = fcls(&[
        "fit", "--model", "linear", "--x", p(&x), "--y", p(&y), "--tau", "0.05", "--init", "zero", "--mode",
        "to-convergence", "--steps", "1", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("beta.csv").exists());
}

#[test]
fn path_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    write_sequence(dir.path());
    let out = dir.path().join("out");
    let bok = dir.path().join("bok.csv");
    let o = fcls(&["path", "--model", "shrinkage", "--bok", p(&bok), "--init", "raw", "--points", "5", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("path_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 6);
    // At the largest tau every edge is killed, leaving six singleton blocks.
    assert!(lines[1].ends_with(",0,6"), "{}", lines[1]);
    let values = std::fs::read_to_string(out.join("path.csv")).unwrap();
    assert_eq!(values.lines().count(), 1 + 5 * 15);
}

#[test]
fn simulate_is_byte_identical_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(
        &scenario,
        r#"{"family": "covariance", "block_sizes": [3, 3], "n_values": [20, 40], "reps": 2, "seed": 5,
            "methods": [{"name": "fcls", "kind": "fcls_lla", "grid_points": 6},
                        {"name": "ht", "kind": "hard_threshold", "grid_points": 6}]}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = fcls(&["--threads", "1", "simulate", "--scenario", p(&scenario), "--out", p(&a)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = Command::new(env!("CARGO_BIN_EXE_fcls"))
        .args(["simulate", "--scenario", p(&scenario), "--out", p(&b)])
        .env("FCLS_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(listing(&a), ["plot_covariance_3x3.svg", "results.csv", "summary.csv"]);
    for f in ["results.csv", "summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn simulate_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&fcls(&["simulate", "--preset", "linear_5", "--reps", "0", "--out", p(&out)])), 1);
    assert_eq!(code(&fcls(&["simulate", "--preset", "poisson_5", "--out", p(&out)])), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"family": "linear", "block_sizes": [], "reps": 0}"#).unwrap();
    let o = fcls(&["simulate", "--scenario", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("reps") && err.contains("block_sizes"), "{err}");
    assert_eq!(code(&fcls(&["simulate", "--out", p(&out)])), 1);
    assert!(!out.exists());
}

#[test]
fn check_exit_codes_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = fcls(&["check", "--only", "laplacian-bounds", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("check_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["family"] == "laplacian-bounds"));

    let o = fcls(&["check", "--only", "majorization", "--inject-fault"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("majorization/surrogate_minus_penalty"));

    let o = fcls(&["check", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 12);

    assert_eq!(code(&fcls(&["check", "--only", "nope"])), 1);
    assert_eq!(code(&fcls(&["--threads", "0", "check"])), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&fcls(&["--help"])), 0);
}

#[test]
fn writes_stay_inside_out_dir() {
    let inputs = tempfile::tempdir().unwrap();
    write_sequence(inputs.path());
    let cwd = tempfile::tempdir().unwrap();
    let out = cwd.path().join("results");
    let bok = inputs.path().join("bok.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_fcls"))
        .current_dir(cwd.path())
        .args(["fit", "--model", "shrinkage", "--bok", p(&bok), "--tau", "0.5", "--init", "raw", "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_fcls"))
        .current_dir(cwd.path())
        .args(["simulate", "--preset", "covariance_5", "--reps", "1", "--n-values", "16", "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(cwd.path()), ["results"]);
    assert_eq!(listing(inputs.path()), ["bok.csv", "samples.csv"]);
}
