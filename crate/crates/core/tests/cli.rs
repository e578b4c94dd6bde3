use std::process::{Command, Output};

use serde_json::Value;

fn parabund(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parabund"))
        .args(args)
        .env_remove("PARABUND_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

const TWO: &str = r#"{"rank":2,"weights":["-1/3","-1/2"]}"#;

#[test]
fn fb_gamma_at_anchor() {
    let out = parabund(&["fb", "gamma", TWO, "--anchor", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), Value::from("-5/6"));
    let out = parabund(&["fb", "gamma", TWO, "--anchor", "1"]);
    assert_eq!(json(&out), Value::from("7/6"));
}

#[test]
fn fb_dual_and_tensor() {
    let out = parabund(&["fb", "dual", r#"{"rank":1,"weights":["0"]}"#]);
    assert_eq!(json(&out)["weights"], serde_json::json!(["0"]));
    let out = parabund(&[
        "fb",
        "tensor",
        r#"{"rank":1,"weights":["-1/3"]}"#,
        r#"{"rank":1,"weights":["-1/2"]}"#,
    ]);
    assert_eq!(json(&out)["weights"], serde_json::json!(["-5/6"]));
}

#[test]
fn fb_lattice_queries() {
    let out = parabund(&["fb", "par", TWO, "--anchor", "1/2"]);
    assert_eq!(json(&out)["par"], serde_json::json!(["-1/3", "1/2"]));
    let out = parabund(&["fb", "frame", TWO, "--anchor", "-1/2"]);
    assert_eq!(json(&out)["exponents"], serde_json::json!(["1", "0"]));
    let out = parabund(&["fb", "degree", TWO, "--section", "1,_"]);
    assert_eq!(json(&out), Value::from("-4/3"));
    let out = parabund(&["fb", "degree", TWO, "--section", "_,_"]);
    assert_eq!(json(&out), Value::from("-inf"));
    let out = parabund(&["fb", "compatible", TWO, "--degrees", "-1/2,-1/3"]);
    assert_eq!(json(&out)["compatible"], Value::from(true));
    let out = parabund(&["fb", "pullback", TWO, "--m", "3"]);
    assert_eq!(json(&out)["weights"], serde_json::json!(["0", "-1/2"]));
    let out = parabund(&["fb", "det", TWO]);
    assert_eq!(json(&out)["lattice_index"], Value::from("-5/6"));
}

#[test]
fn fb_reads_descriptor_files() {
    let dir = std::env::temp_dir().join(format!("parabund-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fb.json");
    std::fs::write(&path, TWO).unwrap();
    let out = parabund(&["fb", "gamma", path.to_str().unwrap()]);
    assert_eq!(json(&out), Value::from("-5/6"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn input_errors_exit_2() {
    for args in [
        vec!["fb", "gamma", r#"{"rank":2,"weights":["-1/3"]}"#],
        vec!["fb", "gamma", r#"{"rank":1,"weights":[0.5]}"#],
        vec!["fb", "gamma", "/nonexistent/descriptor.json"],
        vec!["fb", "pullback", TWO],
        vec!["fb", "gamma", TWO, "--anchor", "1/0"],
        vec![
            "check",
            r#"{"line":{"c":"1/2"}}"#,
            "--schedule",
            "0.1,0.5,4,16",
        ],
        vec!["check", r#"{"circle":{}}"#],
        vec!["suite", "nope"],
    ] {
        let out = parabund(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn check_gamma_on_a_line() {
    let out = parabund(&[
        "check",
        r#"{"line":{"c":"1/2","N":0}}"#,
        "--checks",
        "gamma",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rec = &v["records"][0];
    assert_eq!(rec["predicted"], Value::from("1/2"));
    assert!((rec["estimated"].as_f64().unwrap() - 0.5).abs() < 1e-2);
    assert_eq!(v["pass"], Value::from(true));
    assert_eq!(v["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}

#[test]
fn check_negative_control_and_refusal() {
    let perturbed =
        r#"{"perturb":{"rho":{"log_power":{"coef":1.0,"power":2}},"model":{"line":{"c":"0"}}}}"#;
    let out = parabund(&["check", perturbed, "--checks", "acceptability"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        json(&out)["records"][0]["predicted"],
        Value::from("not acceptable")
    );
    let out = parabund(&["check", perturbed, "--checks", "gamma"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&out)["records"][0]["status"], Value::from("refused"));
}

#[test]
fn check_weak_norm_on_flat_model() {
    let flat = r#"{"direct_sum":[{"line":{"c":"1/3"}},{"line":{"c":"-1/2"}}]}"#;
    let out = parabund(&["check", flat, "--checks", "weak-norm"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["records"][0]["estimated"].as_f64().unwrap() < 1e-6);
}

#[test]
fn check_default_battery_on_nested_model() {
    let m = r#"{"tensor":[{"line":{"c":"1/3","N":2}},{"dual":{"line":{"c":"1/2","N":0}}}]}"#;
    let out = parabund(&[
        "check",
        m,
        "--checks",
        "gamma,acceptability,weak-norm,cover",
        "--m",
        "3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["records"].as_array().unwrap().len(), 4);
}

#[test]
fn check_membership_records_each_order() {
    let out = parabund(&[
        "check",
        r#"{"line":{"c":"3/10","N":1}}"#,
        "--checks",
        "membership",
        "--anchor",
        "-1/5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["records"].as_array().unwrap().len(), 7);
}

#[test]
fn evaluation_errors_exit_3() {
    // the curvature stencil sees a condition number far beyond the limit
    let m = r#"{"direct_sum":[{"line":{"c":"5"}},{"line":{"c":"0"}}]}"#;
    let out = parabund(&["check", m, "--checks", "acceptability"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["records"][0]["status"], Value::from("error"));
}

#[test]
fn failed_checks_exit_1() {
    let out = parabund(&[
        "check",
        r#"{"line":{"c":"1/2"}}"#,
        "--checks",
        "gamma",
        "--tolerance",
        "1e-20",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], Value::from(false));
}

#[test]
fn suites_are_seeded() {
    let a = parabund(&[
        "suite",
        "calculus-properties",
        "--trials",
        "50",
        "--seed",
        "9",
    ]);
    let b = Command::new(env!("CARGO_BIN_EXE_parabund"))
        .args(["suite", "calculus-properties", "--trials", "50"])
        .env("PARABUND_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    let (mut va, mut vb) = (json(&a), json(&b));
    assert_eq!(va["seed"], Value::from(9));
    for v in [&mut va, &mut vb] {
        v["wall_time_s"] = Value::Null;
        v["command"] = Value::Null;
    }
    assert_eq!(va, vb);
}

#[test]
fn dio_and_br_suites_pass() {
    let out = parabund(&["suite", "dio", "--trials", "100", "--q", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = json(&out)["records"].as_array().unwrap().clone();
    assert!(recs.iter().all(|r| r["estimated"] == 100.0));
    let out = parabund(&["suite", "br", "--grid", "0.2,0.05:8:4"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn estimate_with_schedule_and_samples() {
    let m = r#"{"line":{"c":"7/10","N":3}}"#;
    let out = parabund(&["estimate", "gamma", m, "--schedule", "0.1,0.5,12,8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.7).abs() < 1e-2);
    assert_eq!(v["samples_used"], Value::from(6));
    assert!(v.get("samples").is_none());
    let out = parabund(&["estimate", "gamma", m, "--dump-samples"]);
    assert_eq!(json(&out)["samples"].as_array().unwrap().len(), 18);
    // the plain regression misses by far more than the tolerance and says so
    let out = parabund(&["estimate", "gamma", m, "--linear", "--tolerance", "1e-6"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], Value::from("inconclusive"));
}

#[test]
fn estimate_other_quantities() {
    let line = r#"{"line":{"c":"1/2","N":-1}}"#;
    let out = parabund(&["estimate", "polylog", line, "--anchor", "1/2", "--n", "1"]);
    assert_eq!(json(&out)["bounded"], Value::from(true));
    let out = parabund(&["estimate", "polylog", line, "--anchor", "1/2", "--n", "0"]);
    assert_eq!(json(&out)["bounded"], Value::from(false));
    let out = parabund(&[
        "estimate",
        "membership",
        r#"{"line":{"c":"1/2"}}"#,
        "--k",
        "1",
    ]);
    let v = json(&out);
    assert_eq!(
        (v["numeric"].clone(), v["exact"].clone()),
        (Value::from(true), Value::from(true))
    );
    let out = parabund(&["estimate", "weak-norm", r#"{"line":{"c":"1/3","N":2}}"#]);
    assert!((json(&out)["m"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    let out = parabund(&["estimate", "acceptability", r#"{"line":{"c":"0","N":2}}"#]);
    assert!((json(&out)["sup_norm"].as_f64().unwrap() - 2.0).abs() < 0.2);
}
