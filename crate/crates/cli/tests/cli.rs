use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn term(coeff: &str, exps: &[u32]) -> Value {
    json!({"coeff": coeff, "exps": exps})
}

fn poly(terms: Vec<Value>) -> Value {
    json!({ "terms": terms })
}

/// F = (x, x - 1), Φ = 1.
fn line_system() -> Value {
    json!({
        "vars": ["x"],
        "generators": [poly(vec![term("1", &[1])]), poly(vec![term("1", &[1]), term("-1", &[0])])],
        "target": poly(vec![term("1", &[0])]),
    })
}

/// F = (x, y), Φ = 1: not a member.
fn origin_system() -> Value {
    json!({
        "vars": ["x", "y"],
        "generators": [poly(vec![term("1", &[1, 0])]), poly(vec![term("1", &[0, 1])])],
        "target": poly(vec![term("1", &[0, 0])]),
    })
}

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Run { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, v: &Value) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
        p
    }

    fn nullcert(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_nullcert"))
            .args(args)
            .env("NULLCERT_STATE", self.path("state.json"))
            .output()
            .unwrap()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("bad stdout ({e}): {}\nstderr: {}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
    })
}

#[test]
fn certify_then_verify() {
    let r = Run::new();
    let sys = r.write("sys.json", &line_system());
    let cert = r.path("cert.json");
    let o = r.nullcert(&["certify", "--system", s(&sys), "--output", s(&cert)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["mode"], "exact");
    assert_eq!(v["theorem"], "thm12");

    let o = r.nullcert(&["verify", "--system", s(&sys), "--certificate", s(&cert)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["passed"], true);

    // A tampered cofactor must be rejected.
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    file["cofactors"][0] = poly(vec![term("7", &[0])]);
    let bad = r.write("bad.json", &file);
    let o = r.nullcert(&["verify", "--system", s(&sys), "--certificate", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["passed"], false);
}

#[test]
fn verify_refuses_other_system() {
    let r = Run::new();
    let sys = r.write("sys.json", &line_system());
    let cert = r.path("cert.json");
    assert_eq!(r.nullcert(&["certify", "--system", s(&sys), "--output", s(&cert)]).status.code(), Some(0));
    let mut other = line_system();
    other["target"] = poly(vec![term("2", &[0])]);
    let other = r.write("other.json", &other);
    let o = r.nullcert(&["verify", "--system", s(&other), "--certificate", s(&cert)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("different system"));
}

#[test]
fn infeasible_exits_two() {
    let r = Run::new();
    let sys = r.write("sys.json", &origin_system());
    let o = r.nullcert(&["certify", "--system", s(&sys), "--rho", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["status"], "infeasible");

    let o = r.nullcert(&["minrho", "--system", s(&sys), "--max", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout_json(&o)["min_rho"].is_null());
}

#[test]
fn malformed_input_exits_one() {
    let r = Run::new();
    let mut bad = line_system();
    bad["generators"][1]["terms"][0]["exps"] = json!([1, 2]);
    let sys = r.write("sys.json", &bad);
    let o = r.nullcert(&["certify", "--system", s(&sys)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("generators[1]"), "{err}");

    let o = r.nullcert(&["certify", "--system", s(&r.path("missing.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn macaulay_bound() {
    let r = Run::new();
    let sys = r.write("sys.json", &line_system());
    let o = r.nullcert(&["bounds", "--system", s(&sys), "--theorem", "macaulay"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["rho"], 1);
    assert_eq!(v["solvable_globally"], true);

    let o = r.nullcert(&["bounds", "--system", s(&sys)]);
    assert_eq!(stdout_json(&o)["bounds"].as_array().unwrap().len(), 4);
}

#[test]
fn integral_needs_calibration() {
    let r = Run::new();
    let sys = r.write("sys.json", &line_system());
    let args = ["certify-integral", "--system", s(&sys), "--samples", "20000", "--seed", "3"];
    let o = r.nullcert(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nullcert calibrate --n 1"));

    let o = r.nullcert(&["calibrate", "--n", "1", "--strategy", "chart-grid", "--samples", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["reused"], false);
    assert_eq!(v["calibration"]["orientation"], -1);
    let o = r.nullcert(&["calibrate", "--n", "1", "--strategy", "chart-grid", "--samples", "20000"]);
    assert_eq!(stdout_json(&o)["reused"], true);

    let cert = r.path("numeric.json");
    let mut with_out = args.to_vec();
    with_out.extend(["--output", s(&cert)]);
    let o = r.nullcert(&with_out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["mode"], "numeric");
    assert!(v["residual"]["max_rel"].as_f64().unwrap() < 1e-6);
    // Q = (1, -1)
    assert_eq!(v["integral"]["coefficients"][0][0]["nearest_rational"]["value"], "1");
    assert_eq!(v["integral"]["coefficients"][1][0]["nearest_rational"]["value"], "-1");

    let o = r.nullcert(&["verify", "--system", s(&sys), "--certificate", s(&cert)]);
    assert_eq!(o.status.code(), Some(0));

    // Same seed, same output.
    let again = stdout_json(&r.nullcert(&args));
    assert_eq!(again["cofactors"], v["cofactors"]);
}

#[test]
fn stale_calibration_is_refused() {
    let r = Run::new();
    let sys = r.write("sys.json", &line_system());
    assert_eq!(
        r.nullcert(&["calibrate", "--n", "1", "--strategy", "chart-grid", "--samples", "20000"]).status.code(),
        Some(0)
    );
    let state = r.path("state.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&state).unwrap()).unwrap();
    v["entries"][0]["calibration"]["samples"] = json!(12345);
    r.write("state.json", &v);
    let o = r.nullcert(&["certify-integral", "--system", s(&sys), "--samples", "20000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stale"));
}

#[test]
fn dump_point_prints_kernels() {
    let r = Run::new();
    let sys = r.write("sys.json", &line_system());
    let o = r.nullcert(&[
        "calibrate",
        "--dump-point",
        "1;0.5,0.5",
        "--z",
        "1;0",
        "--system",
        s(&sys),
        "--eps",
        "0.1",
        "--chart",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    for key in ["alpha11", "alpha", "sigma", "u", "chi"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
}
