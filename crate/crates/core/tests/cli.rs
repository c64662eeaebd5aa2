//! End-to-end runs of the command-line front end.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformal-index")).args(args).output().expect("binary runs")
}

fn run_fixture(command: &str, scenario: &str, extra: &[&str]) -> Output {
    let path = fixture(scenario);
    let mut args = vec![command, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

/// Structural equality with numbers compared to `1e-9` relative (`1e-12` absolute).
fn assert_close(got: &Value, want: &Value, at: &str) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!((a - b).abs() <= 1e-12 + 1e-9 * b.abs(), "{at}: {a} vs {b}");
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{at}: length");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_close(x, y, &format!("{at}[{i}]"));
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>(), "{at}: keys");
            for (k, x) in a {
                assert_close(x, &b[k], &format!("{at}.{k}"));
            }
        }
        _ => assert_eq!(got, want, "{at}"),
    }
}

fn golden(name: &str) -> Value {
    let path = fixture("golden").join(name);
    serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap()
}

#[test]
fn reports_match_goldens() {
    for (scenario, command) in [
        ("dilation", "trace"),
        ("bott", "pair-even"),
        ("rotation3", "automorphisms"),
        ("rotation3", "todd"),
        ("rotation3", "anomaly"),
        ("dist", "dist-check"),
        ("mobius", "trace"),
    ] {
        let out = run_fixture(command, &format!("{scenario}.toml"), &[]);
        assert_eq!(out.status.code(), Some(0), "{scenario} {command}: {}", String::from_utf8_lossy(&out.stderr));
        assert_close(&report(&out), &golden(&format!("{scenario}.{command}.json")), &format!("{scenario}.{command}"));
    }
}

#[test]
fn seeded_verify_is_byte_identical() {
    let a = run_fixture("verify", "rotation3.toml", &["--seed", "7"]);
    let b = run_fixture("verify", "rotation3.toml", &["--seed", "7", "--threads", "1"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_close(&report(&a), &golden("rotation3.verify.json"), "verify");
    let other = run_fixture("verify", "rotation3.toml", &["--seed", "8"]);
    assert_ne!(report(&other)["inputs_digest"], report(&a)["inputs_digest"]);
}

#[test]
fn expectations_drive_the_exit_code() {
    let dir = tempdir();
    let src = std::fs::read_to_string(fixture("dilation.toml")).unwrap();
    let bad = src.replace("value = [-1.0, 0.0]", "value = [-1.001, 0.0]");
    assert_ne!(src, bad);
    let path = dir.join("dilation_bad.toml");
    std::fs::write(&path, bad).unwrap();
    let out = run(&["trace", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], Value::Bool(false));
    let failed: Vec<_> = r["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == Value::Bool(false)).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "expect.trace.a");
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL expect.trace.a"));
}

#[test]
fn input_errors_exit_with_two_and_a_location() {
    let dir = tempdir();
    let path = dir.join("broken.toml");
    std::fs::write(&path, "[group]\nkind = \"cyclic\"\n").unwrap();
    let out = run(&["trace", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("group.order"));
    let out = run(&["trace", dir.join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["bogus", fixture("dilation.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_scenarios_and_flags() {
    let dir = tempdir();
    let spec: conformal_index::scenario::ScenarioSpec =
        toml::from_str(&std::fs::read_to_string(fixture("dilation.toml")).unwrap()).unwrap();
    let json_path = dir.join("dilation.json");
    std::fs::write(&json_path, serde_json::to_vec_pretty(&spec).unwrap()).unwrap();
    let from_json = report(&run(&["trace", json_path.to_str().unwrap()]));
    let from_toml = report(&run_fixture("trace", "dilation.toml", &[]));
    assert_eq!(from_json["values"], from_toml["values"]);
    assert_ne!(from_json["inputs_digest"], from_toml["inputs_digest"]);

    let out_path = dir.join("report.json");
    let out = run_fixture("trace", "dilation.toml", &["--tol", "1e-7", "--trunc", "2", "--timings", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(r["settings"]["tol"], 1e-7);
    assert_eq!(r["settings"]["truncation"]["words"], 2);
    assert!(r["timings"]["total"].as_f64().unwrap() >= 0.0);
    assert!(from_toml.get("timings").is_none());
}

fn tempdir() -> std::path::PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
