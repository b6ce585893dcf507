//! End-to-end checks of the `lrmr` binary: exit codes, file round-trips,
//! and byte-level determinism of campaign outputs.

use std::path::Path;
use std::process::{Command, Output};

fn lrmr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrmr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_coordinate_ensemble(path: &Path, n: usize) {
    let mut matrices = Vec::new();
    for i in 0..n * n {
        let mut e = vec![0.0; n * n];
        e[i] = 1.0;
        matrices.push(e);
    }
    let doc = serde_json::json!({
        "m": n * n,
        "n1": n,
        "n2": n,
        "matrices": matrices,
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

#[test]
fn bounds_prints_constants_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrmr(
        &[
            "bounds", "--t", "2", "--k", "4", "--delta", "0.5", "--lambda", "0.1", "--eps",
            "0.05",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("3.2659863237109"));
    let json_line = stdout.lines().find(|l| l.starts_with('{')).unwrap();
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(v["condition_ok"], serde_json::Value::Bool(true));
    assert!((v["beta1"].as_f64().unwrap() - 3.265986323710904).abs() < 1e-12);
}

#[test]
fn bounds_above_threshold_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrmr(
        &[
            "bounds", "--t", "2", "--k", "4", "--delta", "0.8", "--lambda", "0.1", "--eps",
            "0.05",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json_line = stdout.lines().find(|l| l.starts_with('{')).unwrap();
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(v["condition_ok"], serde_json::Value::Bool(false));
    assert!(v["c3"].is_null() && v["c4"].is_null());
}

#[test]
fn missing_seed_on_experiment_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrmr(
        &[
            "experiment",
            "--config",
            "cfg.json",
            "--out",
            "t.csv",
            "--summary",
            "s.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrmr(&["bounds", "--t", "2", "--nonsense", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // b has the wrong length for the ensemble
    write_coordinate_ensemble(&dir.path().join("ens.json"), 2);
    std::fs::write(
        dir.path().join("prob.json"),
        r#"{"ensemble": "ens.json", "b": [1.0, 2.0], "lambda": 0.1, "epsilon": 0.0}"#,
    )
    .unwrap();
    let out = lrmr(&["solve", "--problem", "prob.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("dimension mismatch"), "stderr: {stderr}");
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_coordinate_ensemble(&dir.path().join("ens.json"), 3);
    // rank-1 truth diag-ish, noiseless observations
    let truth = [0.8, 0.4, 0.0, 0.4, 0.2, 0.0, 0.0, 0.0, 0.0];
    let prob = serde_json::json!({
        "ensemble": "ens.json",
        "b": truth,
        "lambda": 0.05,
        "epsilon": 0.0,
        "truth": {"rows": 3, "cols": 3, "entries": truth},
    });
    std::fs::write(
        dir.path().join("prob.json"),
        serde_json::to_string_pretty(&prob).unwrap(),
    )
    .unwrap();

    let out = lrmr(
        &[
            "solve",
            "--problem",
            "prob.json",
            "--solver",
            "rnnm",
            "--out",
            "result.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap())
            .unwrap();
    assert_eq!(result["converged"], serde_json::Value::Bool(true));
    assert_eq!(result["solver"], "rnnm");

    let out = lrmr(
        &[
            "verify",
            "--problem",
            "prob.json",
            "--solution",
            "result.json",
            "--t",
            "2",
            "--k",
            "1",
            "--delta",
            "0.05",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["lemma3"]["pass5"], serde_json::Value::Bool(true));
    assert_eq!(report["theorem1"]["status"], "verified");
    assert_eq!(report["theorem1"]["pass8"], serde_json::Value::Bool(true));
    assert_eq!(report["theorem1"]["pass9"], serde_json::Value::Bool(true));
}

#[test]
fn ric_modes_and_seed_requirements() {
    let dir = tempfile::tempdir().unwrap();
    write_coordinate_ensemble(&dir.path().join("ens.json"), 2);

    // exact mode on the coordinate (identity) design
    let out = lrmr(
        &[
            "ric", "--mode", "exact", "--ensemble", "ens.json", "--k", "2", "--out", "ric.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ric.json")).unwrap())
            .unwrap();
    assert!(doc["value"].as_f64().unwrap() <= 1e-12);
    assert_eq!(doc["is_exact"], serde_json::Value::Bool(true));

    // mc mode without a seed is a usage error
    let out = lrmr(
        &[
            "ric", "--mode", "mc", "--ensemble", "ens.json", "--k", "1", "--samples", "100",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    // mc mode with a seed works and is a lower bound
    let out = lrmr(
        &[
            "ric", "--mode", "mc", "--ensemble", "ens.json", "--k", "1", "--samples", "100",
            "--seed", "7", "--out", "mc.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("mc.json")).unwrap())
            .unwrap();
    assert_eq!(doc["is_lower_bound"], serde_json::Value::Bool(true));
}

#[test]
fn verify_accepts_ric_estimate_file() {
    let dir = tempfile::tempdir().unwrap();
    write_coordinate_ensemble(&dir.path().join("ens.json"), 2);
    let truth = [0.5, 0.0, 0.0, 0.0];
    let prob = serde_json::json!({
        "ensemble": "ens.json",
        "b": truth,
        "lambda": 0.05,
        "epsilon": 0.0,
        "truth": {"rows": 2, "cols": 2, "entries": truth},
    });
    std::fs::write(
        dir.path().join("prob.json"),
        serde_json::to_string(&prob).unwrap(),
    )
    .unwrap();
    assert!(lrmr(
        &["solve", "--problem", "prob.json", "--out", "r.json"],
        dir.path()
    )
    .status
    .success());
    assert!(lrmr(
        &[
            "ric", "--mode", "mc", "--ensemble", "ens.json", "--k", "2", "--samples", "200",
            "--seed", "3", "--out", "ric.json",
        ],
        dir.path()
    )
    .status
    .success());
    let out = lrmr(
        &[
            "verify",
            "--problem",
            "prob.json",
            "--solution",
            "r.json",
            "--t",
            "2",
            "--k",
            "1",
            "--ric",
            "ric.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("theorem1: (8) pass"), "stdout: {stdout}");
}

#[test]
fn experiment_is_deterministic_and_preserves_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "n1": 3, "n2": 3, "m": 9, "rank": 1, "k": 1, "t": 2.0,
        "lambda": 0.1, "epsilon": 0.05,
        "ensemble_kind": "coordinate",
        "noise_kind": "sphere-uniform-at-eps",
        "trials": 4
    });
    std::fs::write(
        dir.path().join("cfg.json"),
        serde_json::to_string_pretty(&cfg).unwrap(),
    )
    .unwrap();
    let cfg_bytes = std::fs::read(dir.path().join("cfg.json")).unwrap();

    for run in ["a", "b"] {
        let out = lrmr(
            &[
                "experiment",
                "--config",
                "cfg.json",
                "--seed",
                "42",
                "--out",
                &format!("{run}.csv"),
                "--summary",
                &format!("{run}.json"),
                "--gate-samples",
                "500",
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
    // input untouched
    assert_eq!(cfg_bytes, std::fs::read(dir.path().join("cfg.json")).unwrap());

    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial_seed,frob_error,map_error,tail_norm,lemma3_pass,thm1_8_lhs,thm1_8_rhs,\
thm1_9_lhs,thm1_9_rhs,gate_status,iterations,converged"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn experiment_emits_consumable_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "n1": 3, "n2": 3, "m": 8, "rank": 1, "k": 1, "t": 2.0,
        "lambda": 0.1, "epsilon": 0.05,
        "ensemble_kind": "gaussian",
        "noise_kind": "sphere-uniform-at-eps",
        "trials": 2
    });
    std::fs::write(dir.path().join("cfg.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = lrmr(
        &[
            "experiment",
            "--config",
            "cfg.json",
            "--seed",
            "9",
            "--out",
            "t.csv",
            "--summary",
            "s.json",
            "--ensemble-out",
            "ens.json",
            "--gate-samples",
            "200",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // the emitted ensemble feeds straight back into the ric subcommand
    let out = lrmr(
        &[
            "ric", "--mode", "mc", "--ensemble", "ens.json", "--k", "1", "--samples", "50",
            "--seed", "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn phase_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "base": {
            "n1": 3, "n2": 3, "m": 9, "rank": 1, "k": 1, "t": 2.0,
            "lambda": 1e-4, "epsilon": 0.0,
            "ensemble_kind": "coordinate",
            "noise_kind": "none",
            "trials": 2
        },
        "grid": {"m-rank": {"m": [9], "rank": [1, 2]}},
        "success_threshold": 1e-3
    });
    std::fs::write(dir.path().join("phase.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = lrmr(
        &[
            "phase",
            "--config",
            "phase.json",
            "--seed",
            "5",
            "--out",
            "phase.csv",
            "--gate-samples",
            "200",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "m,rank,lambda,epsilon,trials,successes,success_fraction,median_frob_error"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.ends_with(",1,") || row.contains(",1,") || !row.is_empty());
    }
}
