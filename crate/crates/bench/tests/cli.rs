use std::path::Path;
use std::process::Command;

use tris_isac_bench::config::{Axis, ExperimentConfig};
use tris_isac_bench::experiments::trace_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tris-isac-bench"))
}

fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml_str("[scenario]\nelements = 4\n[solver]\nmax_iters = 12\n").unwrap();
    cfg.seeds = vec![3];
    cfg
}

/// Fixed-seed tiny run against the checked-in trace. Set `UPDATE_GOLDEN=1`
/// to rewrite the file after an intended change.
#[test]
fn golden_trace() {
    let csv = trace_csv(&tiny_config(), Axis::None, 0.0, 3).unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_n4_seed3.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &csv).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv, expected);
}

#[test]
fn converge_writes_one_trace_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.toml");
    std::fs::write(&cfg_path, "[solver]\nmax_iters = 5\nmin_iters = 1\n").unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["converge", "--axis", "n", "--values", "4,9", "--seed", "2"])
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for name in ["trace_n4_seed2.csv", "trace_n9_seed2.csv", "links_n4_seed2.csv", "state_n9_seed2.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }

    let check = bin().arg("check").arg(out.join("state_n4_seed2.json")).output().unwrap();
    let code = check.status.code().unwrap();
    assert!(code == 0 || code == 2, "unexpected exit {code}");
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.toml");
    std::fs::write(&cfg_path, "[thresholds]\nP_t = -1\n").unwrap();
    let out = bin().arg("converge").arg("--config").arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thresholds.P_t"));

    let out = bin().args(["sweep"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "a sweep without an axis is a validation failure");
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("verify").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle_report.json")).unwrap()).unwrap();
    assert!(report["corrected"]["reports"].as_array().unwrap().len() >= 85);
}

#[test]
fn sweep_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.toml");
    std::fs::write(&cfg_path, "seeds = [1, 2]\n[scenario]\nelements = 4\n[solver]\nmax_iters = 5\nmin_iters = 1\n").unwrap();
    let out = bin()
        .args(["sweep", "--axis", "pt", "--values", "0.5,1,2"])
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 6);
    assert_eq!(summary.lines().count(), 1 + 3);
    assert!(rows.starts_with("axis,value,seed,sum_rate,max_min_rmi,link_count,"));
}
