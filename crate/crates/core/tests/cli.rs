//! End-to-end tests of the `irdetect` binary: exit codes, declared output
//! files, and run-to-run determinism.

use std::path::Path;
use std::process::{Command, Output};

fn irdetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irdetect"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn small_spec(dir: &Path, seed: u64) -> String {
    let spec = format!(
        "width = 32\nheight = 32\nframes = 3\nbackground_rank = 2\nnoise_sigma = 0.02\n\
         seed = {seed}\ntarget = 8, 8, 2, 1, 0.3, 1.5\n"
    );
    let path = dir.join("scene.spec");
    std::fs::write(&path, spec).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = irdetect(&["detect", "--input", "x.txt", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "no_such_knob = 1\n").unwrap();
    let out = irdetect(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_knob"));
}

#[test]
fn too_few_frames_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = format!(
        "width = 16\nheight = 16\nframes = 2\nbackground_rank = 1\nnoise_sigma = 0.0\nseed = 1\n"
    );
    let spec_path = dir.path().join("two.spec");
    std::fs::write(&spec_path, spec).unwrap();
    let data = dir.path().join("data");
    let out = irdetect(&[
        "synth",
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = irdetect(&[
        "detect",
        "--input",
        data.join("manifest.txt").to_str().unwrap(),
        "--r",
        "16",
        "--out",
        dir.path().join("det").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("2 frame"), "stderr: {err}");
}

#[test]
fn pipeline_produces_declared_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), 3);
    let data = dir.path().join("data");
    let det = dir.path().join("det");
    let roc = dir.path().join("roc");

    let out = irdetect(&["synth", "--spec", &spec, "--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["manifest.txt", "truth.csv", "run.log", "frame_0000.pgm", "frame_0002.pgm"] {
        assert!(data.join(f).exists(), "missing {f}");
    }

    let out = irdetect(&[
        "detect",
        "--input",
        data.join("manifest.txt").to_str().unwrap(),
        "--r",
        "32",
        "--out",
        det.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["maps.txt", "diagnostics.csv", "run.log", "target_0000.pgm", "background_0000.pgm"] {
        assert!(det.join(f).exists(), "missing {f}");
    }
    let diag = std::fs::read_to_string(det.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("window,iterations,final_residual,wall_time_secs\n"));
    assert!(diag.lines().count() >= 2);

    let out = irdetect(&[
        "roc",
        "--input",
        det.join("maps.txt").to_str().unwrap(),
        "--truth",
        data.join("truth.csv").to_str().unwrap(),
        "--out",
        roc.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["roc.csv", "auc.csv", "run.log"] {
        assert!(roc.join(f).exists(), "missing {f}");
    }
    let csv = std::fs::read_to_string(roc.join("roc.csv")).unwrap();
    assert!(csv.starts_with("tau,pd,fa\n"));
}

#[test]
fn same_seed_and_config_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), 5);
    let mut csvs = Vec::new();
    for run in 0..2 {
        let data = dir.path().join(format!("data{run}"));
        let det = dir.path().join(format!("det{run}"));
        let roc = dir.path().join(format!("roc{run}"));
        assert!(irdetect(&["synth", "--spec", &spec, "--out", data.to_str().unwrap()])
            .status
            .success());
        assert!(irdetect(&[
            "detect",
            "--input",
            data.join("manifest.txt").to_str().unwrap(),
            "--r",
            "32",
            "--out",
            det.to_str().unwrap(),
        ])
        .status
        .success());
        assert!(irdetect(&[
            "roc",
            "--input",
            det.join("maps.txt").to_str().unwrap(),
            "--truth",
            data.join("truth.csv").to_str().unwrap(),
            "--out",
            roc.to_str().unwrap(),
        ])
        .status
        .success());
        let frames: Vec<Vec<u8>> = (0..3)
            .map(|i| std::fs::read(data.join(format!("frame_{i:04}.pgm"))).unwrap())
            .collect();
        let maps: Vec<u8> = std::fs::read(det.join("target_0000.pgm")).unwrap();
        let roc_csv = std::fs::read(roc.join("roc.csv")).unwrap();
        let auc_csv = std::fs::read(roc.join("auc.csv")).unwrap();
        csvs.push((frames, maps, roc_csv, auc_csv));
    }
    assert_eq!(csvs[0], csvs[1], "outputs must be byte-identical per seed");
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = irdetect(&["selftest", "--out", dir.path().join("st").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(irdetect(&["--help"]).status.code(), Some(0));
    assert_eq!(irdetect(&["--version"]).status.code(), Some(0));
}
