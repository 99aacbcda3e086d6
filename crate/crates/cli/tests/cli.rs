use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oscidelay"));
    c.env_remove("OSCIDELAY_JOBS");
    c
}

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Copies a spec into `dir` with `sigma` replaced.
fn oscillating_kernel_with(dir: &Path, sigma: f64) -> PathBuf {
    let mut v: Value = serde_json::from_slice(&std::fs::read(spec("oscillating-kernel.json")).unwrap()).unwrap();
    v["kernel"]["sigma"] = sigma.into();
    let p = dir.join(format!("kernel-{sigma}.json"));
    std::fs::write(&p, serde_json::to_vec(&v).unwrap()).unwrap();
    p
}

#[test]
fn certify_exit_codes_follow_the_sigma_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let inside = oscillating_kernel_with(dir.path(), 0.4);
    let out = run(&["certify", s(&inside), "--criterion", "explicit-a"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_eq!(report["certificates"][0]["verdict"], "certified");
    assert_eq!(report["exit_code"], 0);

    let outside = oscillating_kernel_with(dir.path(), 0.5);
    let out = run(&["certify", s(&outside), "--criterion", "explicit-a"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["certificates"][0]["verdict"], "not-certified");
}

#[test]
fn certificate_carries_the_documented_fields() {
    let out = run(&["certify", s(&spec("square-wave.json")), "--criterion", "delay-only"]);
    let cert = &json(&out)["certificates"][0];
    for key in ["criterion", "verdict", "lhs", "threshold", "constants", "mode", "provenance"] {
        assert!(cert.get(key).is_some(), "missing {key} in {cert}");
    }
    assert_eq!(cert["mode"], "conservative");
}

#[test]
fn inapplicable_criterion_exits_four() {
    let out = run(&["certify", s(&spec("square-wave.json")), "--criterion", "kernel-only"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn reference_ode_alone_does_not_certify_the_equation() {
    let out = run(&["certify", s(&spec("non-decaying.json"))]);
    assert_eq!(code(&out), 3);
    let report = json(&out);
    let window = report["certificates"].as_array().unwrap().iter().find(|c| c["criterion"] == "ode-window").unwrap();
    assert_eq!(window["verdict"], "certified");
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"terms\": [ ").unwrap();
    let out = run(&["certify", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let negative = dir.path().join("negative.json");
    std::fs::write(&negative, r#"{"terms":[{"coef":{"kind":"const","value":1},"tau":-1}]}"#).unwrap();
    assert_eq!(code(&run(&["certify", s(&negative)])), 2);
    assert_eq!(code(&run(&["certify", s(&dir.path().join("missing.json"))])), 2);
}

#[test]
fn models_certify_through_their_own_criteria() {
    let out = run(&["certify", s(&spec("controlled-hutchinson.json"))]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> =
        json(&out)["certificates"].as_array().unwrap().iter().map(|c| c["criterion"].as_str().unwrap().to_string()).collect();
    assert_eq!(names, ["hutchinson-combined", "hutchinson-growth", "hutchinson-control"]);

    let out = run(&["certify", s(&spec("mackey-glass.json")), "--criterion", "delay-only"]);
    assert!(matches!(code(&out), 0 | 3 | 4));
    let out = run(&["certify", s(&spec("square-wave.json")), "--criterion", "mackey-glass"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn non_decaying_simulation_has_no_decay() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let decay = dir.path().join("decay.json");
    let out = run(&[
        "simulate",
        s(&spec("non-decaying.json")),
        "--t-end",
        "4.1034",
        "--fit-start",
        "0",
        "-o",
        s(&csv),
        "--decay-out",
        s(&decay),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let est: Value = serde_json::from_slice(&std::fs::read(&decay).unwrap()).unwrap();
    assert!(est["lambda_hat"].as_f64().unwrap().abs() < 1e-3, "{est}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first, [0.0, 1.0]);
}

#[test]
fn pure_kernel_simulation_decays() {
    let out = run(&["simulate", s(&spec("pure-kernel.json")), "--t-end", "40"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert!(report["decay"]["lambda_hat"].as_f64().unwrap() > 0.0);
    assert!(report["decay"]["r2"].as_f64().unwrap() > 0.9);
    assert!(report["trajectory"]["max_abs"].as_f64().unwrap() >= 1.0);
}

#[test]
fn oversized_step_exits_two() {
    let out = run(&["simulate", s(&spec("pure-kernel.json")), "--step", "10"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("too large"));
}

#[test]
fn history_from_file_is_used() {
    let out = run(&[
        "simulate",
        s(&spec("square-wave.json")),
        "--t-end",
        "0.05",
        "--step",
        "0.01",
        "--history-file",
        s(&spec("history-wave.json")),
    ]);
    assert_eq!(code(&out), 0);
    let x = json(&out)["trajectory"]["final_value"].as_f64().unwrap();
    let constant = json(&run(&["simulate", s(&spec("square-wave.json")), "--t-end", "0.05", "--step", "0.01"]));
    assert!((x - constant["trajectory"]["final_value"].as_f64().unwrap()).abs() > 1e-6);
}

#[test]
fn model_simulation_settles_at_equilibrium() {
    let out = run(&["simulate", s(&spec("controlled-hutchinson.json")), "--history", "1.2", "--t-end", "200"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert!((report["trajectory"]["final_value"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

fn boundary(args: &[&str]) -> f64 {
    let out = run(args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    json(&out)["sweep"]["boundary"].as_f64().unwrap()
}

#[test]
fn sigma_sweep_finds_the_kernel_boundary() {
    let b = boundary(&[
        "sweep",
        s(&spec("oscillating-kernel.json")),
        "--param",
        "/kernel/sigma",
        "--range",
        "0.05",
        "1",
        "--criterion",
        "explicit-a",
    ]);
    assert!((b - 0.46628).abs() < 1e-4, "{b}");
}

#[test]
fn delay_sweep_finds_the_rounded_hutchinson_boundary() {
    let b = boundary(&[
        "sweep",
        s(&spec("controlled-hutchinson.json")),
        "--param",
        "/r_terms/0/tau",
        "--param",
        "/r_terms/0/delay_offset/amplitude",
        "--range",
        "0.01",
        "0.3",
        "--criterion",
        "hutchinson-combined",
        "--rounding",
        "3,1.5",
    ]);
    assert!((b - 0.0797).abs() < 1e-3, "{b}");
}

#[test]
fn tau_sweep_with_shifted_split() {
    let b = boundary(&[
        "sweep",
        s(&spec("square-wave.json")),
        "--param",
        "/terms/0/tau",
        "--range",
        "0.01",
        "1",
        "--criterion",
        "delay-only",
        "--shift",
        "0.6",
    ]);
    assert!((b - 0.22678).abs() < 1e-4, "{b}");
}

#[test]
fn sweep_rejects_bad_pointer() {
    let out = run(&[
        "sweep",
        s(&spec("square-wave.json")),
        "--param",
        "/terms/7/tau",
        "--range",
        "0.01",
        "1",
        "--criterion",
        "delay-only",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_is_independent_of_job_count() {
    let family = spec("oscillating-kernel.json");
    let args = [
        "sweep",
        s(&family),
        "--param",
        "/kernel/sigma",
        "--range",
        "0.05",
        "1",
        "--criterion",
        "explicit-a",
    ];
    let one = bin().args(args).env("OSCIDELAY_JOBS", "1").output().unwrap();
    let four = bin().args(args).env("OSCIDELAY_JOBS", "4").output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    let bad = bin().args(args).env("OSCIDELAY_JOBS", "lots").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn reproduce_single_case() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("repro.json");
    let out = run(&["reproduce", "--which", "square-wave", "-o", s(&report)]);
    assert_eq!(code(&out), 0);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("tau_boundary"));
    assert!(table.contains("KNOWN-DISCREPANCY"));
    let v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["reproduction"]["failures"], 0);
    assert_eq!(code(&run(&["reproduce", "--which", "no-such-case"])), 2);
}

#[test]
fn reports_are_byte_stable() {
    let input = spec("oscillating-kernel.json");
    let args = ["certify", s(&input)];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["input_sha256"].as_str().unwrap().len(), 64);
    let text = String::from_utf8(a.stdout).unwrap();
    let lhs = text.lines().find(|l| l.trim_start().starts_with("\"lhs\": ")).unwrap();
    let digits = lhs.split(": ").nth(1).unwrap().trim_end_matches(',');
    assert_eq!(digits.split('e').next().unwrap().replace(['.', '-'], "").len(), 17, "{lhs}");
}

#[test]
fn outputs_are_replaced_whole() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    std::fs::write(&target, "stale contents that are longer than nothing at all").unwrap();
    let out = run(&["certify", s(&spec("square-wave.json")), "--criterion", "delay-only", "-o", s(&target)]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    assert_eq!(v["certificates"][0]["criterion"], "delay-only");
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);

    let missing_dir = dir.path().join("nope").join("report.json");
    let out = run(&["certify", s(&spec("square-wave.json")), "-o", s(&missing_dir)]);
    assert_eq!(code(&out), 2);
}
