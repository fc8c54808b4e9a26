//! End-to-end checks of the `ktwist` binary: exit codes, reproducibility
//! and the shape of the emitted reports.

use std::path::PathBuf;
use std::process::Command;

fn ktwist() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ktwist"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ktwist_cli_test_{}_{name}", std::process::id()));
    p
}

#[test]
fn kgroup_reports_spot_values_and_is_reproducible() {
    let out1 = tmp("kgroup1.json");
    let out2 = tmp("kgroup2.json");
    for out in [&out1, &out2] {
        let status = ktwist()
            .args(["kgroup", "--n", "2", "--k", "2", "--output"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "identical config must give byte-identical output");

    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["k0"]["group"]["free_rank"], 3);
    assert_eq!(report["k0"]["group"]["invariant_factors"], serde_json::json!([]));
    assert_eq!(report["k1"]["group"]["free_rank"], 3);
    assert_eq!(report["k1"]["group"]["invariant_factors"], serde_json::json!([2]));
    std::fs::remove_file(out1).ok();
    std::fs::remove_file(out2).ok();
}

#[test]
fn kgroup_rejects_invalid_twist() {
    // n ≥ 2 required
    let out = ktwist().args(["kgroup", "--n", "1", "--k", "2"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n ≥ 2") || err.contains("invalid twist"), "stderr: {err}");

    // k ≠ 0 required
    let out = ktwist().args(["kgroup", "--n", "2", "--k", "0"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn flow_counts_and_seeded_primitive_is_deterministic() {
    let out = tmp("flow.json");
    let status = ktwist()
        .args([
            "flow",
            "--variant",
            "odd",
            "--cutoff",
            "4",
            "--charge-window",
            "2",
            "--grid",
            "64",
            "--output",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["net_flow"], 1);
    assert_eq!(report["passed"], true);
    std::fs::remove_file(out).ok();

    let p1 = tmp("prim1.json");
    let p2 = tmp("prim2.json");
    for p in [&p1, &p2] {
        let status = ktwist()
            .args(["primitive", "--n", "3", "--k", "2", "--count", "25", "--seed", "11", "--output"])
            .arg(p)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    std::fs::remove_file(p1).ok();
    std::fs::remove_file(p2).ok();
}

#[test]
fn heat_writes_csv_and_summary() {
    let dir = tmp("heat_dir");
    let out = tmp("heat.json");
    let status = ktwist()
        .args([
            "heat",
            "--variant",
            "odd",
            "--t",
            "1,4",
            "--cutoff",
            "6",
            "--charge-window",
            "4",
            "--grid",
            "128",
        ])
        .arg("--out-dir")
        .arg(&dir)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["densities"].as_array().unwrap().len(), 2);
    assert!(report["tolerances"]["oracle"].as_f64().unwrap() <= 1e-6);

    let csv = std::fs::read_to_string(dir.join("odd_t1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("phi,value"));
    assert_eq!(lines.count(), 128);
    std::fs::remove_dir_all(dir).ok();
    std::fs::remove_file(out).ok();
}

#[test]
fn character_and_suspend_check_pass() {
    let out = tmp("char.json");
    let status = ktwist()
        .args(["character", "--n", "2", "--k", "3", "--output"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["quotient_group"]["invariant_factors"], serde_json::json!([3]));
    assert_eq!(report["distinct_torsion_cosets"], 3);
    assert_eq!(report["checks"]["desuspension_factorization"], true);
    std::fs::remove_file(out).ok();

    let out = tmp("suspend.json");
    let status = ktwist()
        .args([
            "suspend-check",
            "--cutoff",
            "4",
            "--charge-window",
            "2",
            "--phi-count",
            "2",
            "--grid",
            "32",
            "--output",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["max_defect_s_in_pi_2pi"], 0.0);
    assert_eq!(report["passed"], true);
    std::fs::remove_file(out).ok();
}

#[test]
fn relations_subcommand_reports_exact_zeros() {
    let out = tmp("relations.json");
    let status = ktwist()
        .args([
            "relations",
            "--variant",
            "odd",
            "--cutoff",
            "4",
            "--charge-window",
            "2",
            "--mode-max",
            "2",
            "--output",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["all_exact"], true);
    assert_eq!(report["max_violation"], 0.0);
    std::fs::remove_file(out).ok();
}
