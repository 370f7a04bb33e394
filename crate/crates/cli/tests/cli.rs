use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bvb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvb")).args(args).output().expect("binary runs")
}

fn bvb_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvb"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_symmetric_gradient() {
    let out = bvb(&["analyze", "catalog:symmetric_gradient", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["ellipticity"]["elliptic"], true);
    let c = r["ellipticity"]["constant"].as_f64().unwrap();
    assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
    assert_eq!(r["c_ellipticity"]["decision"], "PASS");
    assert_eq!(r["ell"]["ell"], 2);
    assert_eq!(r["mixing"]["triple_dims"]["0"], 100);
    assert_eq!(r["parameters"]["seed"], 0);
    assert_eq!(r["tool"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn analyze_divergence_is_not_elliptic() {
    let out = bvb(&["analyze", "catalog:divergence", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["ellipticity"]["elliptic"], false);
    assert_eq!(r["ell"]["ell"], Value::Null);
}

#[test]
fn analyze_cauchy_riemann_witness() {
    let out = bvb(&["analyze", "catalog:cauchy_riemann", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["c_ellipticity"]["decision"], "FAIL");
    assert!(r["c_ellipticity"]["witness"]["residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn inconclusive_exits_three() {
    // The null space only settles at degree 2, so a cap of 3 cannot confirm it.
    let out = bvb(&["analyze", "catalog:deviatoric", "--n", "3", "--dmax", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["c_ellipticity"]["decision"], "INCONCLUSIVE");
    assert!(stderr(&out).contains("INCONCLUSIVE"));
}

#[test]
fn malformed_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, r#"{"n": 2, "k": 1, "dimV": 1, "coefficients": []}"#).unwrap();
    let out = bvb(&["analyze", path(&spec)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dimW"), "{}", stderr(&out));

    std::fs::write(&spec, r#"{"catalog": "gradient", "n": 2, "coefficients": []}"#).unwrap();
    assert_eq!(bvb(&["analyze", path(&spec)]).status.code(), Some(2));
    std::fs::write(&spec, r#"{"catalog": "gradient", "n": 2, "extra": 1}"#).unwrap();
    let out = bvb(&["analyze", path(&spec)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("extra"));
    assert_eq!(bvb(&["analyze", "catalog:nonexistent", "--n", "2"]).status.code(), Some(2));
    assert_eq!(bvb(&["analyze", "catalog:gradient"]).status.code(), Some(2));
    assert_eq!(bvb(&["analyze", "missing-file.json"]).status.code(), Some(2));
}

#[test]
fn catalog_reference_file_matches_catalog_argument() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("ref.json");
    std::fs::write(&spec, r#"{"catalog": "hessian", "n": 2}"#).unwrap();
    let a = json(&bvb(&["analyze", path(&spec)]));
    let b = json(&bvb(&["analyze", "catalog:hessian", "--n", "2"]));
    assert_eq!(a["input"]["operator_sha256"], b["input"]["operator_sha256"]);
    assert_ne!(a["input"]["sha256"], b["input"]["sha256"]);
    assert_eq!(a["c_ellipticity"], b["c_ellipticity"]);
}

#[test]
fn reports_are_deterministic() {
    let args = ["analyze", "catalog:cauchy_riemann", "--n", "2", "--seed", "7"];
    let one = bvb_env(&args, "BVB_THREADS", "1");
    let four = bvb_env(&args, "BVB_THREADS", "4");
    let default = bvb(&args);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, default.stdout);
    assert_eq!(json(&one)["parameters"]["seed"], 7);
    assert_eq!(bvb_env(&args, "BVB_THREADS", "0").status.code(), Some(2));
}

#[test]
fn analyze_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("report.json");
    let out = bvb(&["analyze", "catalog:gradient", "--n", "3", "--out", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&file).unwrap(), out.stdout);
}

#[test]
fn linearize_hessian_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let lifted = dir.path().join("lifted.json");
    let out = bvb(&["linearize", "catalog:hessian", "--n", "2", "--out", path(&lifted)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["lifted"]["k"], 1);
    let curl = &r["curl_rows"];
    assert!(curl["end"].as_u64().unwrap() > curl["start"].as_u64().unwrap());
    assert!(r["round_trip"]["max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["round_trip"]["polynomials"], 5);

    let original = json(&bvb(&["analyze", "catalog:hessian", "--n", "2"]));
    let relifted = json(&bvb(&["analyze", path(&lifted)]));
    assert_eq!(original["c_ellipticity"]["decision"], relifted["c_ellipticity"]["decision"]);
    assert_eq!(relifted["c_ellipticity"]["decision"], "PASS");
}

#[test]
fn linearize_preserves_c_ellipticity_failure() {
    let dir = tempfile::tempdir().unwrap();
    let lifted = dir.path().join("cr.json");
    assert_eq!(
        bvb(&["linearize", "catalog:cauchy_riemann", "--n", "2", "--out", path(&lifted)]).status.code(),
        Some(0)
    );
    let r = json(&bvb(&["analyze", path(&lifted)]));
    assert_eq!(r["c_ellipticity"]["decision"], "FAIL");
}

#[test]
fn linearize_first_order_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let lifted = dir.path().join("grad.json");
    let source = dir.path().join("source.json");
    std::fs::write(&source, r#"{"catalog": "gradient", "n": 3}"#).unwrap();
    let r = json(&bvb(&["linearize", path(&source), "--out", path(&lifted)]));
    assert_eq!(r["curl_rows"]["start"], r["curl_rows"]["end"]);
    let a = json(&bvb(&["analyze", path(&lifted)]));
    let b = json(&bvb(&["analyze", "catalog:gradient", "--n", "3"]));
    assert_eq!(a["input"]["operator_sha256"], b["input"]["operator_sha256"]);
}

#[test]
fn fieldlab_deviatoric_jump() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("lab");
    let out = bvb(&[
        "fieldlab",
        "catalog:deviatoric",
        "--n",
        "3",
        "--jump",
        "1,-0.5,0.25:0,0.1,0:1,2,2",
        "--h",
        "0.015625",
        "--radii",
        "0.3,0.2,0.12",
        "--out",
        path(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert!(r["structure"]["relative_error"].as_f64().unwrap() < 0.1);
    assert!(r["jump_detection"].as_array().unwrap().iter().all(|d| !d["triple"].is_null()));
    assert_eq!(r["failures"].as_array().unwrap().len(), 0);
    for name in ["density.csv", "jump_contrast.csv", "quasi_continuity.csv"] {
        let file = std::fs::File::open(out_dir.join(name)).unwrap();
        let (radii, values) = bvb_core::field::read_profile_csv(file).unwrap();
        assert_eq!(radii, vec![0.3, 0.2, 0.12]);
        assert!(values.iter().all(|v| v.is_finite()));
    }
    assert_eq!(std::fs::read(out_dir.join("report.json")).unwrap(), out.stdout);
}

#[test]
fn fieldlab_smooth_has_no_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = bvb(&[
        "fieldlab",
        "catalog:symmetric_gradient",
        "--n",
        "2",
        "--smooth",
        "sine",
        "--h",
        "0.0078125",
        "--radii",
        "0.3,0.2,0.12",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert!(r["jump_detection"].as_array().unwrap().iter().all(|d| d["triple"].is_null()));
    assert_eq!(r["structure"]["skipped"], "no planted jump");
}

#[test]
fn fieldlab_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let base = |extra: &[&str]| {
        let mut args = vec!["fieldlab", "catalog:gradient", "--n", "2", "--h", "0.0078125", "--out", path(dir.path())];
        args.extend_from_slice(extra);
        bvb(&args)
    };
    let out = base(&["--smooth", "sine", "--radii", "0.3,0.01"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("below 2h"), "{}", stderr(&out));
    assert_eq!(base(&["--smooth", "sine", "--radii", "0.1,0.2"]).status.code(), Some(2));
    assert_eq!(base(&["--smooth", "nope", "--radii", "0.2"]).status.code(), Some(2));
    assert_eq!(base(&["--jump", "1:0", "--radii", "0.2"]).status.code(), Some(2));
    assert_eq!(base(&["--radii", "0.2"]).status.code(), Some(2));
    let hess = bvb(&[
        "fieldlab", "catalog:hessian", "--n", "2", "--h", "0.0078125", "--out", path(dir.path()), "--jump", "1:0:1,0",
        "--radii", "0.2",
    ]);
    assert_eq!(hess.status.code(), Some(2));
    assert!(stderr(&hess).contains("first-order"));
}

#[test]
fn catalog_lists_builtins() {
    let out = bvb(&["catalog"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["gradient", "hessian", "symmetric_gradient", "deviatoric", "divergence", "cauchy_riemann"] {
        assert!(text.contains(name));
    }
}
