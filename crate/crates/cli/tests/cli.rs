//! End-to-end tests of the `dgpe` binary: artifacts, exit codes,
//! determinism and manifest replay.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dgpe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dgpe"))
}

/// Small scalar instance in rescaled coordinates: O(1) scales, quick flow.
const SCALAR_BASE: &[&str] = &[
    "--lambda1", "0", "--lambda2", "0",
    "--lambda3", "-0.6666666666666666",
    "--p", "3",
    "--mass", "8.583510322654297",
    "--n", "48", "--box", "26",
];

/// The discrete stationarity floor at 48^3 sits near 3e-5; runs that should
/// converge need the Pohozaev tolerance above it.
const SCALAR_ARGS: &[&str] = &[
    "--lambda1", "0", "--lambda2", "0",
    "--lambda3", "-0.6666666666666666",
    "--p", "3",
    "--mass", "8.583510322654297",
    "--n", "48", "--box", "26",
    "--tol-p", "1e-4",
];

fn run(args: &[&str]) -> Output {
    dgpe().args(args).output().expect("binary runs")
}

fn sha(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

#[test]
fn constants_pass_on_a_coupled_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "constants",
        "--lambda1", "-1", "--lambda2", "-0.05", "--lambda3", "-1",
        "--p", "3", "--mass-frac", "0.5",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("overall: PASS"));
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("constants.json")).unwrap())
            .unwrap();
    assert!(record["regime"]["pass"].as_bool().unwrap());
    // manifest lists the artifact with its hash
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert!(manifest["pass"].as_bool().unwrap());
    assert_eq!(manifest["files"][0]["path"], "constants.json");
    assert_eq!(
        manifest["files"][0]["sha256"].as_str().unwrap(),
        sha(&dir.path().join("constants.json"))
    );
}

#[test]
fn constants_fail_outside_the_coupling_region() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "constants",
        "--lambda1", "1", "--lambda2", "1", "--lambda3", "-1",
        "--p", "3", "--mass", "1",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["error"]["code"], 1);
}

#[test]
fn wp_emits_profile_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["wp", "--p", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("wp_profile.csv")).unwrap();
    assert!(csv.starts_with("r,w\n"));
    assert!(csv.lines().count() > 1000);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("wp_summary.json")).unwrap())
            .unwrap();
    for key in ["p", "W0", "mass_norm", "C_p"] {
        assert!(summary[key].is_number(), "missing {key}");
    }
    // the cubic profile peaks near 3.14 with unit decay rate
    assert!((summary["W0"].as_f64().unwrap() - 3.1438).abs() < 1e-3);
}

fn groundstate_into(dir: &Path) -> Output {
    let mut args = vec!["groundstate"];
    args.extend_from_slice(SCALAR_ARGS);
    args.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    run(&args)
}

#[test]
fn groundstate_writes_artifacts_and_is_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out = groundstate_into(dir_a.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(groundstate_into(dir_b.path()).status.success());
    for name in ["field.bin", "iterations.csv", "result.json"] {
        assert_eq!(
            sha(&dir_a.path().join(name)),
            sha(&dir_b.path().join(name)),
            "{name} differs between identical runs"
        );
    }
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir_a.path().join("result.json")).unwrap())
            .unwrap();
    assert!(result["converged"].as_bool().unwrap());
    assert!(result["well_ok"].as_bool().unwrap());
    let csv = std::fs::read_to_string(dir_a.path().join("iterations.csv")).unwrap();
    assert!(csv.starts_with("iteration,energy,p_value,mu,grad_norm\n"));
}

#[test]
fn manifest_replay_reproduces_the_run() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    assert!(groundstate_into(dir_a.path()).status.success());
    let manifest = dir_a.path().join("manifest.json");
    let out = run(&[
        "groundstate",
        "--config", manifest.to_str().unwrap(),
        "--out", dir_b.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["field.bin", "iterations.csv", "result.json"] {
        assert_eq!(sha(&dir_a.path().join(name)), sha(&dir_b.path().join(name)));
    }
}

#[test]
fn snapshot_feeds_back_as_initial_guess() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    assert!(groundstate_into(dir_a.path()).status.success());
    let field = dir_a.path().join("field.bin");
    let mut args = vec!["groundstate"];
    args.extend_from_slice(SCALAR_ARGS);
    let field_str = field.to_str().unwrap();
    args.extend_from_slice(&["--init", "file", "--init-file", field_str]);
    args.extend_from_slice(&["--out", dir_b.path().to_str().unwrap()]);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir_b.path().join("result.json")).unwrap())
            .unwrap();
    // restarting from the converged state finishes almost immediately
    assert!(result["iterations"].as_u64().unwrap() < 10);
}

#[test]
fn report_renders_the_claim_table() {
    let dir = tempfile::tempdir().unwrap();
    assert!(groundstate_into(dir.path()).status.success());
    let manifest = dir.path().join("manifest.json");
    let out = run(&["report", "--manifest", manifest.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("overall: PASS"));
    assert!(stdout.contains("claims pass"));
    assert!(stdout.contains("PASS"));
}

#[test]
fn solver_failure_maps_to_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["groundstate"];
    args.extend_from_slice(SCALAR_BASE);
    args.extend_from_slice(&["--max-iter", "2", "--tol", "1e-14"]);
    args.extend_from_slice(&["--out", dir.path().to_str().unwrap()]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["code"], 2);
}

#[test]
fn missing_flags_and_missing_files_map_to_one_and_three() {
    let out = run(&["groundstate", "--p", "3", "--lambda3", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["report", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn injected_impossible_bound_turns_claims_red() {
    // an excursion bound below the integrator floor cannot be met: the run
    // itself succeeds but the claim table must carry FAIL rows and the exit
    // status must be nonzero
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["stability"];
    args.extend_from_slice(SCALAR_ARGS);
    args.extend_from_slice(&[
        "--eps", "1e-9",
        "--trials", "1",
        "--t-final", "0.2",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");
    assert!(stdout.contains("overall: FAIL"));
}
