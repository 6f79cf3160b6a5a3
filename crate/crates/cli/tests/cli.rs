use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("rates", "cc-noiseless"),
    ("rates", "cc-noisy"),
    ("rates", "gaussian"),
    ("rates", "product"),
    ("simulate", "cc-noiseless"),
    ("simulate", "cc-noisy"),
    ("simulate", "cc-es"),
    ("simulate", "es-rs"),
    ("simulate", "qc-cc"),
    ("simulate", "resolvability"),
    ("verify", "gentle"),
    ("verify", "pj-bound"),
    ("verify", "sutherland"),
    ("verify", "random-code"),
];

fn qsteg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsteg")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qsteg-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn every_builtin_config_passes_and_is_deterministic() {
    for (group, which) in SUBCOMMANDS {
        let a = qsteg(&[group, which]);
        assert_eq!(a.status.code(), Some(0), "{group} {which}: {}", String::from_utf8_lossy(&a.stderr));
        let b = qsteg(&[group, which]);
        assert_eq!(a.stdout, b.stdout, "{group} {which} not byte-stable");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn seed_override_is_deterministic() {
    let a = qsteg(&["simulate", "resolvability", "--seed", "42"]);
    let b = qsteg(&["simulate", "resolvability", "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn noiseless_demo_matches_golden() {
    let out = qsteg(&["simulate", "cc-noiseless", "--config", repo_config("simulate_cc_noiseless.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("w,n,mbar,zeta_achieved,dist_trace,p_decode,bound_ok\n"));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/simulate_cc_noiseless.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() || !golden.exists() {
        std::fs::write(&golden, &csv).unwrap();
    }
    assert_eq!(csv, std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn out_dir_gets_csv_and_json() {
    let dir = scratch("out");
    let out = qsteg(&["verify", "pj-bound", "--out", dir.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("verify-pj-bound.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["kind"], "verify-pj-bound");
    assert_eq!(summary["passed"], true);
    assert!(summary["version"].is_string() && summary["wall_time_s"].is_number());
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("verify-pj-bound.json")).unwrap()).unwrap();
    assert_eq!(on_disk["rows"], 6);
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = scratch("empty");
    let cfg = dir.join("empty.json");
    std::fs::write(&cfg, r#"{"kind": "verify-gentle", "seed": 1, "sweep": []}"#).unwrap();
    let out = qsteg(&["verify", "gentle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "instance,lhs,eps,bound,holds\n");
}

#[test]
fn malformed_config_exits_2_with_line() {
    let dir = scratch("bad");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, "{\n  \"kind\": \"rate-gaussian\",\n  \"sweep\": [\n    {\"n\": 1.0, \"bogus\": 2}\n  ]\n}\n").unwrap();
    let out = qsteg(&["rates", "gaussian", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn mismatched_kind_and_bad_usage_exit_2() {
    let out = qsteg(&["verify", "gentle", "--config", repo_config("rate_gaussian.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(qsteg(&["rates", "nonsense"]).status.code(), Some(2));
    assert_eq!(qsteg(&["verify", "gentle", "--config", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn infeasible_parameters_exit_2() {
    let dir = scratch("infeasible");
    let cfg = dir.join("cc_es.json");
    std::fs::write(&cfg, r#"{"kind": "simulate-cc-es", "sweep": [{"mbar": 4, "zeta": 0.1}]}"#).unwrap();
    let out = qsteg(&["simulate", "cc-es", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
