use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn stostab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stostab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("running stostab")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn families_lists_the_registry() {
    let out = Command::new(env!("CARGO_BIN_EXE_stostab")).arg("families").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["sine-drift", "cosine-well", "cellular", "irrational", "rotation"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn bad_config_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["solve", "--eps", "-0.1"],
        &["converge", "--eps", "0.1,0.2,0.05"],
        &["gradflow", "--delta", "0.7"],
        &["solve", "--family", "no-such-family"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out_dir = dir.path().join(format!("case{i}"));
        let out = stostab(args, &out_dir);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out_dir.exists(), "{args:?} wrote artifacts");
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[numerics]\neps = [0.1]\nepsilon = 0.2\n").unwrap();
    let out = stostab(&["solve", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "family = \"sine-drift-cos-gamma\"\n[numerics]\neps = [0.3]\nn = 256\n",
    )
    .unwrap();
    let o = dir.path().join("o");
    let out = stostab(&["solve", "--config", cfg.to_str().unwrap(), "--eps", "0.1,0.05"], &o);
    assert_eq!(out.status.code(), Some(0));
    let manifest = json(&o.join("manifest.json"));
    assert_eq!(manifest["config"]["eps"], serde_json::json!([0.1, 0.05]));
    assert_eq!(manifest["config"]["n"], 256);
    assert!(o.join("density_1.csv").exists() && !o.join("density_2.csv").exists());
}

#[test]
fn rotation_solve_has_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = stostab(&["solve", "--family", "rotation", "--eps", "0.2,0.05"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("density_1.csv"));
    assert_eq!(header, ["x", "rho0", "rho_eps", "r_eps"]);
    assert_eq!(rows.len(), 512);
    assert!(rows.iter().all(|r| r[3].abs() < 1e-12 && (r[2] - 1.0).abs() < 1e-12));
}

#[test]
fn manifest_digests_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = stostab(&["gradflow", "--family", "double-well"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let manifest = json(&dir.path().join("manifest.json"));
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(artifacts.iter().any(|a| a["file"] == "wells.csv"));
    for a in artifacts {
        let bytes = std::fs::read(dir.path().join(a["file"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(a["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    assert_eq!(manifest["passed"], true);
}

#[test]
fn gradflow_concentrates_on_the_well() {
    let dir = tempfile::tempdir().unwrap();
    let out = stostab(&["gradflow"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("concentration.csv"));
    assert_eq!(header, ["eps", "outside_mass", "eps_times_log_mass"]);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
}

#[test]
fn converge_reports_the_derivative_slope_shortfall() {
    // the exact residual of this family has derivative slope about 0.874,
    // so the run reports that single failed check
    let dir = tempfile::tempdir().unwrap();
    let out = stostab(&["converge"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let summary = json(&dir.path().join("summary.json"));
    let checks = summary["checks"].as_object().unwrap();
    let failed: Vec<&String> = checks.iter().filter(|(_, v)| **v != true).map(|(k, _)| k).collect();
    assert_eq!(failed, ["deriv_l2_slope"]);
    assert!(summary["report"]["l2_slope"]["slope"].as_f64().unwrap() >= 0.9);
    let (header, rows) = read_csv(&dir.path().join("report.csv"));
    assert_eq!(header, ["eps", "l2", "deriv_l2", "sup", "l2_bound", "h1_bound"]);
    assert!(rows.iter().all(|r| r[1] <= r[4]));
}

#[test]
fn converge_passes_for_variable_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = stostab(&["converge", "--family", "sine-drift-cos-gamma"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn torus_cellular_is_rigid() {
    let dir = tempfile::tempdir().unwrap();
    let out = stostab(&["torus", "--n", "32", "--eps", "0.2,0.05"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("r \u{2261} 0"));
    let (_, rows) = read_csv(&dir.path().join("density_0.csv"));
    assert_eq!(rows.len(), 32 * 32);
    assert!(rows.iter().all(|r| (r[2] - 1.0).abs() < 1e-8));
}

#[test]
fn simulate_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--n-steps", "100000", "--n-trajectories", "4", "--bins", "32"];
    let out = stostab(&args, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("histogram_0.csv"));
    assert_eq!(header, ["bin_center", "mass", "reference_density"]);
    assert_eq!(rows.len(), 32);
    assert!((rows.iter().map(|r| r[1]).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn simulate_weak_probe_decays() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--eps", "0.4,0.1", "--n-steps", "200000", "--n-trajectories", "4"];
    let out = stostab(&args, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&dir.path().join("summary.json"));
    let gaps: Vec<f64> = summary["weak_probe"]["max_gap_to_zero_noise"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g.as_f64().unwrap())
        .collect();
    assert_eq!(gaps.len(), 2);
    assert!(gaps[1] < gaps[0]);
}
