use std::process::Command as Proc;

use clap::Parser;
use serde_json::Value;
use sympack::cli::{exit_code_for, run, Cli, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_PASS};
use sympack::Error;

fn parse(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("sympack").chain(args.iter().copied())).unwrap()
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Runs the binary, returning (exit code, parsed stdout report if any).
fn sympack(args: &[&str]) -> (i32, Option<Value>) {
    let out = Proc::new(env!("CARGO_BIN_EXE_sympack")).args(args).output().unwrap();
    (out.status.code().unwrap(), serde_json::from_slice(&out.stdout).ok())
}

#[test]
fn reports_are_deterministic() {
    let measure = data("three-atoms.json");
    for args in [
        vec!["fold", "--samples", "200", "--injectivity-samples", "2000"],
        vec!["embed", "--measure", &measure, "--samples", "2000", "--audit-samples", "500"],
        vec!["qs", "--space", "cube-sphere:8", "--op", "median"],
        vec!["involutivity", "--map", "rho", "--points", "100"],
    ] {
        let cli = parse(&args);
        let a = run(&cli).unwrap();
        let b = run(&cli).unwrap();
        assert!(a.pass, "{args:?}: {:?}", a.checks);
        assert_eq!(a.deterministic_json(), b.deterministic_json(), "{args:?}");
    }
}

#[test]
fn seed_changes_the_sample() {
    let a = run(&parse(&["fold", "--samples", "100", "--injectivity-samples", "100", "--seed", "1"])).unwrap();
    let b = run(&parse(&["fold", "--samples", "100", "--injectivity-samples", "100", "--seed", "2"])).unwrap();
    assert_ne!(a.deterministic_json(), b.deterministic_json());
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code_for(&Error::BadK(4)), EXIT_CONFIG);
    assert_eq!(exit_code_for(&Error::NotSolid), EXIT_CONFIG);
    assert_eq!(exit_code_for(&Error::MedianAmbiguous), EXIT_CHECK_FAILED);
    assert_eq!(sympack(&["fold", "--k", "4"]).0, EXIT_CONFIG);
    assert_eq!(sympack(&["fold", "--n", "1"]).0, EXIT_CONFIG);
    assert_eq!(sympack(&["embed", "--measure", "/nonexistent.json"]).0, EXIT_CONFIG);
    assert_eq!(sympack(&["nonsense"]).0, EXIT_CONFIG);
    assert_eq!(sympack(&["fibers", "--a", "1,1", "--c", "0.1"]).0, EXIT_CONFIG);
    assert_eq!(sympack(&["--help"]).0, EXIT_PASS);
}

#[test]
fn fibers_kinds() {
    let (code, r) = sympack(&["fibers", "--a", "1,1,1", "--c", "-1,0.3,0.1"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(r.unwrap()["result"]["kind"], "empty");
    let (_, r) = sympack(&["fibers", "--a", "1,1", "--c", "0,0"]);
    assert_eq!(r.unwrap()["result"]["kind"], "complement_of_box");
    let (_, r) = sympack(&["fibers", "--a", "1,1", "--c", "0.5,0.5"]);
    let r = r.unwrap();
    assert_eq!(r["result"]["kind"], "product");
    assert_eq!(r["result"]["points"], 4);
}

#[test]
fn qs_median_of_height() {
    let r = run(&parse(&["qs", "--space", "cube-sphere:32", "--op", "median"])).unwrap();
    let z = r.result["value"].as_f64().unwrap();
    assert!(z.abs() < 2.0 / 32.0, "{z}");
    let r = run(&parse(&["qs", "--space", "cube-sphere:16", "--op", "superheavy"])).unwrap();
    assert!(r.pass, "{:?}", r.checks);
    let r = run(&parse(&["qs", "--space", "cube-sphere:16", "--op", "pushforward", "--poly", "-1,0,2"])).unwrap();
    assert!(r.pass, "{:?}", r.checks);
}

#[test]
fn verify_bundled_tables() {
    for (table, tol) in [("shear-pieces.json", "1e-10"), ("lift-compose.json", "1e-6")] {
        let r = run(&parse(&["verify", "--map", &data(table), "--samples", "300", "--tol", tol])).unwrap();
        assert!(r.pass, "{table}: {:?}", r.checks);
    }
}

#[test]
fn report_file_is_written() {
    let dir = std::env::temp_dir().join(format!("sympack-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fibers.json");
    let (code, stdout) = sympack(&["fibers", "--a", "1,1", "--c", "0.5,0.5", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
    assert!(stdout.is_none());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["config"]["subcommand"], "fibers");
    assert!(v["timing"]["elapsed_ms"].as_f64().unwrap() >= 0.0);
    std::fs::remove_dir_all(&dir).unwrap();
}
