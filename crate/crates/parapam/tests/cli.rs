//! End-to-end checks of the `parapam` binary: exit codes, file outputs and
//! config plumbing.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parapam"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("parapam_cli_{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn help_exits_cleanly() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("noise"));
    assert!(text.contains("proptest"));
}

#[test]
fn unknown_command_is_a_validation_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_key_is_a_validation_error_with_location() {
    let out = bin()
        .args(["noise", "--set", "nonsense=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nonsense"), "{err}");
    assert!(err.contains("--set"), "{err}");
}

#[test]
fn exponent_gate_violation_is_refused_with_the_constraint_named() {
    let dir = tmpdir("gate");
    let out = bin()
        .args(["diagnose", "--set", "beta=0.5"])
        .arg("--set")
        .arg(format!("outdir={}", dir.display()))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beta"), "{err}");
}

#[test]
fn noise_command_writes_fields_and_table() {
    let dir = tmpdir("noise");
    let out = bin()
        .args(["noise", "--set", "n=32", "--set", "eps=2^-2", "--set", "seeds=3"])
        .arg("--set")
        .arg(format!("outdir={}", dir.display()))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("renorm.csv").exists());
    for comp in ["xi", "x", "res"] {
        assert!(dir.join(format!("noise_s3_n32_eps2.5e-1_{comp}.pfld")).exists());
    }
}

#[test]
fn converge_with_too_few_eps_is_refused() {
    let dir = tmpdir("conv2");
    let out = bin()
        .args(["converge", "--set", "n=32", "--set", "eps=2^-2,2^-3", "--set", "seeds=0"])
        .arg("--set")
        .arg(format!("outdir={}", dir.display()))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn proptest_bony_passes_and_reports() {
    let dir = tmpdir("bony");
    let out = bin()
        .args(["proptest", "bony"])
        .arg("--set")
        .arg(format!("outdir={}", dir.display()))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS"), "{text}");
    assert!(dir.join("proptest_bony.csv").exists());
}

#[test]
fn proptest_unknown_suite_is_a_validation_error() {
    let out = bin().args(["proptest", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_drives_a_small_solve() {
    let dir = tmpdir("solvecfg");
    let conf = dir.join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "n = 32\nt_final = 0.002\nstride = 2\nseeds = 1\neps = 2^-2\nnoise = white\noutdir = {}\n",
            dir.display()
        ),
    )
    .unwrap();
    let out = bin()
        .arg("solve")
        .arg("--config")
        .arg(&conf)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = dir.join("traj_s1_n32_eps2.5e-1");
    assert!(traj.join("manifest.txt").exists());
    assert!(traj.join("snap_00000.pfld").exists());

    // determinism: rerunning leaves identical bytes
    let manifest_before = std::fs::read(traj.join("manifest.txt")).unwrap();
    let snap_before = std::fs::read(traj.join("snap_00000.pfld")).unwrap();
    let out = bin().arg("solve").arg("--config").arg(&conf).output().unwrap();
    assert!(out.status.success());
    assert_eq!(manifest_before, std::fs::read(traj.join("manifest.txt")).unwrap());
    assert_eq!(snap_before, std::fs::read(traj.join("snap_00000.pfld")).unwrap());
}
