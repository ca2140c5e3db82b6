use std::path::PathBuf;
use std::process::{Command, Output};

fn specs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn hhvb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hhvb")).args(args).output().expect("binary runs")
}

fn spec(name: &str) -> String {
    specs().join(name).display().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn identities_pass_on_disc_and_ball() {
    for n in ["1", "2"] {
        let out = hhvb(&["verify-identities", "--n", n]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out);
        assert_eq!(r["summary"]["failed"], 0);
        assert!(r["records"].as_array().unwrap().iter().all(|x| !x["anchor"].as_str().unwrap().is_empty()));
    }
}

#[test]
fn tight_tolerance_fails_with_exit_two() {
    let out = hhvb(&["verify-identities", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["summary"]["failed"].as_u64().unwrap() > 0);
}

#[test]
fn reports_are_deterministic() {
    let a = hhvb(&["verify-identities", "--n", "2", "--seed", "11"]);
    let b = hhvb(&["verify-identities", "--n", "2", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bundled_specs_intertwine() {
    for name in ["disc_m1.json", "disc_m2.json", "ball2_chain012.json", "ball2_multiplicity.json"] {
        let out = hhvb(&["gamma-intertwine", "--spec", &spec(name), "--samples", "10"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn singular_lambda_is_a_structured_failure() {
    let out = hhvb(&["gamma-intertwine", "--spec", &spec("disc_m1.json"), "--lambda", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    let rec = r["records"].as_array().unwrap().iter().find(|x| x["name"] == "gamma.construction").unwrap();
    assert_eq!(rec["verdict"], "singular_lambda");
    assert!(rec["detail"].as_str().unwrap().contains("c_1 + c_1 = 0"));
}

#[test]
fn nonunitarizable_kernel_suite_fails() {
    let out = hhvb(&["kernel-suite", "--n", "2", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["records"][0]["verdict"], "indefinite");
}

#[test]
fn disc_weight_one_tuple_norms_are_one() {
    let out = hhvb(&["tuple-suite", "--n", "1", "--lambda", "-0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sequence,degree,value"));
    for line in lines.filter(|l| l.starts_with("norm.M1")) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn scalar_threshold_scan_brackets_zero() {
    let out = hhvb(&["regularity-scan", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let rec = r["records"].as_array().unwrap().iter().find(|x| x["name"] == "scan.threshold.m0").unwrap();
    assert!(rec["detail"]["lambda_hat"].as_f64().unwrap().abs() < 1e-3);
}

#[test]
fn usage_and_config_errors_exit_three() {
    assert_eq!(hhvb(&["no-such-command"]).status.code(), Some(3));
    assert_eq!(hhvb(&["gamma-intertwine"]).status.code(), Some(3));
    assert_eq!(hhvb(&["kernel-suite", "--spec", "/nonexistent/spec.json"]).status.code(), Some(3));
    assert_eq!(hhvb(&["verify-identities", "--format", "csv"]).status.code(), Some(3));
    assert_eq!(hhvb(&["verify-identities", "--n", "0"]).status.code(), Some(3));
}

#[test]
fn malformed_spec_reports_line() {
    let dir = std::env::temp_dir().join(format!("hhvb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\n  \"n\": 1,\n  \"lambda\": oops\n}\n").unwrap();
    let out = hhvb(&["kernel-suite", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn report_written_to_file() {
    let path = std::env::temp_dir().join(format!("hhvb-report-{}.json", std::process::id()));
    let out = hhvb(&["kernel-suite", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "kernel-suite");
    assert_eq!(r["config"]["seed"], 7);
}
