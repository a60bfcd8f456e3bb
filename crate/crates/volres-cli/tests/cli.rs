//! End-to-end driver tests: exit codes, determinism, file layout.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_volres"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("volres_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn small_ball_config(out_dir: &Path) -> String {
    format!(
        r#"{{
  "schema": 1,
  "domain": {{"kind": "ball", "radius": 1.0, "resolution": 5}},
  "epsilons": [0.0, 0.0001, 0.01],
  "resolutions": [4, 5],
  "bound_samples": 50,
  "sweep": {{"points": 11, "epsilon": 0.05}},
  "seed": 3,
  "out_dir": {:?}
}}"#,
        out_dir.to_str().unwrap()
    )
}

#[test]
fn resonances_outputs_are_deterministic() {
    let dir = tmp_dir("det");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    let cfg = write_config(&dir, "cfg.json", &small_ball_config(&out_a));
    let st = bin()
        .args(["resonances", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    let st = bin()
        .args(["resonances", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_b)
        .status()
        .unwrap();
    assert!(st.success());
    for name in ["resonances.csv", "localization.json", "expansion.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn malformed_config_exits_2_without_partial_files() {
    let dir = tmp_dir("badcfg");
    let out = dir.join("out");
    let cfg = write_config(&dir, "broken.json", "{ not json");
    let st = bin()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(!out.exists(), "no files may be written on config errors");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tmp_dir("unknown");
    let cfg = write_config(
        &dir,
        "cfg.json",
        r#"{"schema": 1, "domain": {"kind": "ball", "radius": 1.0, "resolution": 5}, "surprise": 1}"#,
    );
    let st = bin()
        .args(["oracle", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn spectrum_on_box_has_no_oracle_columns() {
    let dir = tmp_dir("box");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &format!(
            r#"{{"schema": 1, "domain": {{"kind": "box", "extents": [1.0, 1.0, 1.0], "resolution": 4}}, "out_dir": {:?}}}"#,
            out.to_str().unwrap()
        ),
    );
    let st = bin()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    let table = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(table.starts_with("resolution,n,lambda1,second_cluster_multiplicity\n"));
    assert!(!out.join("oracle.csv").exists());
    assert!(out.join("modes_res4.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_rejects_observation_inside_inclusion() {
    let dir = tmp_dir("sweepgeo");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &format!(
            r#"{{
  "schema": 1,
  "domain": {{"kind": "ball", "radius": 1.0, "resolution": 5}},
  "sweep": {{"points": 5, "epsilon": 0.9, "observation": [0.1, 0.0, 0.0]}},
  "out_dir": {:?}
}}"#,
            out.to_str().unwrap()
        ),
    );
    let st = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_single_point_writes_single_row() {
    let dir = tmp_dir("sweep1");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &format!(
            r#"{{
  "schema": 1,
  "domain": {{"kind": "ball", "radius": 1.0, "resolution": 5}},
  "sweep": {{"points": 1, "epsilon": 0.1}},
  "out_dir": {:?}
}}"#,
            out.to_str().unwrap()
        ),
    );
    let st = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "header plus one row: {csv}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn localize_consumes_cached_resonances() {
    let dir = tmp_dir("localize");
    let out = dir.join("out");
    let cfg = write_config(&dir, "cfg.json", &small_ball_config(&out));
    let st = bin()
        .args(["resonances", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    let cached = out.join("resonances.csv");
    let cfg2 = write_config(
        &dir,
        "cfg2.json",
        &format!(
            r#"{{
  "schema": 1,
  "domain": {{"kind": "ball", "radius": 1.0, "resolution": 5}},
  "resonances_csv": {:?},
  "out_dir": {:?}
}}"#,
            cached.to_str().unwrap(),
            out.to_str().unwrap()
        ),
    );
    let st = bin()
        .args(["localize", "--config"])
        .arg(&cfg2)
        .arg("--check")
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(out.join("localize.json")).unwrap();
    assert!(text.contains("\"status\": \"checked\""));
    assert!(text.contains("\"status\": \"hypothesis_not_met\""));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn oracle_writes_expected_head() {
    let dir = tmp_dir("oracle");
    let out = dir.join("out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &format!(
            r#"{{"schema": 1, "domain": {{"kind": "ball", "radius": 1.0, "resolution": 4}}, "out_dir": {:?}}}"#,
            out.to_str().unwrap()
        ),
    );
    let st = bin()
        .args(["oracle", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(out.join("oracle.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "l,n,k_root,lambda,multiplicity");
    // ground row: l=0, k = pi/2
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,1,1.5707963267948"), "{first}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn env_var_overrides_out_dir() {
    let dir = tmp_dir("envdir");
    let out_env = dir.join("env_out");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &format!(
            r#"{{"schema": 1, "domain": {{"kind": "ball", "radius": 1.0, "resolution": 4}}, "out_dir": {:?}}}"#,
            dir.join("cfg_out").to_str().unwrap()
        ),
    );
    let st = bin()
        .args(["oracle", "--config"])
        .arg(&cfg)
        .env("VOLRES_OUT_DIR", &out_env)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(out_env.join("oracle.csv").exists());
    assert!(!dir.join("cfg_out").exists());
    let _ = std::fs::remove_dir_all(&dir);
}
