//! End-to-end checks of the `adsde` binary: config validation, exit codes,
//! and bit-identical outputs across reruns and worker counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn adsde() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adsde"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("adsde-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.ini");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn invalid_epsilon_exits_2_and_names_key() {
    let dir = tmp_dir("bad-eps");
    let cfg = write_config(&dir, "[run]\nepsilons = 2.0\n");
    let out = adsde().args(["selftest", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("epsilon"), "stderr: {err}");
}

#[test]
fn unknown_key_exits_2() {
    let dir = tmp_dir("bad-key");
    let cfg = write_config(&dir, "[run]\nnonsense = 1\n");
    let out = adsde().args(["selftest", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
}

#[test]
fn selftest_exits_zero_regardless_of_model() {
    let dir = tmp_dir("selftest");
    let cfg = write_config(&dir, "[model]\nname = three-level\n");
    let out = adsde()
        .args(["selftest", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out/audits.json").exists());
}

#[test]
fn table_model_roundtrip() {
    // A constant commuting pair given as matrix tables.
    let dir = tmp_dir("table");
    let h = "0.0 0.0 0.0 0.0 0.0 0.0 0.0 1.0 0.0\n1.0 0.0 0.0 0.0 0.0 0.0 0.0 1.0 0.0\n";
    let g = "0.0 0.0 0.0 0.0 0.0 0.0 0.0 0.5 0.0\n1.0 0.0 0.0 0.0 0.0 0.0 0.0 0.5 0.0\n";
    fs::write(dir.join("h.tsv"), h).unwrap();
    fs::write(dir.join("g.tsv"), g).unwrap();
    let cfg = write_config(
        &dir,
        &format!(
            "[model]\nname = table\nh_table = {}\ngamma_table = {}\n[run]\nepsilons = 0.2\nn_paths = 150\n",
            dir.join("h.tsv").display(),
            dir.join("g.tsv").display()
        ),
    );
    let out = adsde()
        .args(["tunneling", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    // A static model has zero tunneling: the exponential audit flags
    // insufficient variance, so the run exits 1 while still writing data.
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out/samples_0.2.csv").exists());
    let json = fs::read_to_string(dir.join("out/audits.json")).unwrap();
    assert!(json.contains("tunneling_mean"));
}

#[test]
fn outputs_identical_across_runs_and_workers() {
    let dir = tmp_dir("determinism");
    let body = "[run]\nepsilons = 0.2\nn_paths = 120\nseed = 9\n";
    let cfg = write_config(&dir, body);
    let mut blobs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "3"), ("c", "1")] {
        let out_dir = dir.join(tag);
        let status = adsde()
            .args(["tunneling", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(&out_dir)
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert!(status.success());
        blobs.push((
            fs::read(out_dir.join("samples_0.2.csv")).unwrap(),
            fs::read(out_dir.join("audits.json")).unwrap(),
        ));
    }
    assert_eq!(blobs[0].0, blobs[1].0, "CSV differs between worker counts");
    assert_eq!(blobs[0].1, blobs[1].1, "JSON differs between worker counts");
    assert_eq!(blobs[0].0, blobs[2].0, "CSV differs between reruns");
    assert_eq!(blobs[0].1, blobs[2].1, "JSON differs between reruns");
}

#[test]
fn epsilons_flag_overrides_config() {
    let dir = tmp_dir("eps-flag");
    let cfg = write_config(&dir, "[run]\nepsilons = 0.2\nn_paths = 30\n");
    let out_dir = dir.join("out");
    let status = adsde()
        .args(["tunneling", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .args(["--epsilons", "0.25"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("samples_0.25.csv").exists());
    assert!(!out_dir.join("samples_0.2.csv").exists());
}
