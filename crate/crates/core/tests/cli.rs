//! End-to-end checks of the `chb` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chb_core::diagnostics::CSV_HEADER;
use chb_core::snapshot;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn chb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chb")).args(args).output().expect("spawn chb")
}

fn run_to(cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    chb(&args)
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let k = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn validate_accepts_bundled_configs() {
    for name in ["coupled.toml", "smoke.toml", "stationary.toml", "darcy_sweep.toml", "n_sweep.toml", "p_sweep.toml"] {
        let out = chb(&["validate", "--config", config(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn incompatible_source_exits_with_2() {
    let cfg = config("invalid_source.toml");
    let out = chb(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL source_bound"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let out = run_to(cfg.to_str().unwrap(), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("diagnostics.csv").exists());
    assert!(dir.path().join("validation.json").exists());
}

#[test]
fn missing_config_is_a_config_error() {
    let out = chb(&["run", "--config", "/nonexistent/chb.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let cfg = config("smoke.toml");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = run_to(cfg.to_str().unwrap(), d.path(), &["--snapshot-every", "10"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["config.toml", "version.txt", "validation.json", "diagnostics.csv", "summary.json"] {
        assert!(a.path().join(f).is_file(), "{f} missing");
    }
    let csv_a = fs::read(a.path().join("diagnostics.csv")).unwrap();
    let csv_b = fs::read(b.path().join("diagnostics.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);

    let snap = snapshot::read(&a.path().join("fields").join("phi_000050.chb")).unwrap();
    assert_eq!(snap.name, "phi");
    assert!((snap.time - 5e-3).abs() < 1e-12);
    assert_eq!(snap.field.values().len(), 32 * 32);
}

#[test]
fn seed_changes_the_initial_noise() {
    let cfg = config("smoke.toml");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_to(cfg.to_str().unwrap(), a.path(), &["--seed", "1"]);
    run_to(cfg.to_str().unwrap(), b.path(), &["--seed", "2"]);
    let ea = column(&fs::read_to_string(a.path().join("diagnostics.csv")).unwrap(), "energy");
    let eb = column(&fs::read_to_string(b.path().join("diagnostics.csv")).unwrap(), "energy");
    assert_ne!(ea[0], eb[0]);
}

#[test]
fn smoke_run_dissipates_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to(config("smoke.toml").to_str().unwrap(), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let e = column(&csv, "energy");
    assert!(e.len() > 10);
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
    let drift: Vec<f64> = column(&csv, "mass_phi").iter().zip(column(&csv, "mass_ode_ref")).map(|(a, b)| a - b).collect();
    assert!(drift.iter().all(|d| d.abs() <= 1e-9));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["verdicts"]["energy_nonincreasing"], true);
}

#[test]
fn stationary_state_has_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to(config("stationary.toml").to_str().unwrap(), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    for name in ["energy_residual", "mass_phi", "max_abs_phi", "u_sq"] {
        let v = column(&csv, name);
        assert!(v.iter().skip(1).all(|x| *x == 0.0), "{name}: {v:?}");
    }
    assert!(column(&csv, "min_sigma").iter().all(|s| *s == 1.0));
}

#[test]
fn binary_snapshots_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to(
        config("stationary.toml").to_str().unwrap(),
        dir.path(),
        &["--snapshot-every", "5", "--binary-fields"],
    );
    assert_eq!(out.status.code(), Some(0));
    let s = snapshot::read(&dir.path().join("fields").join("sigma_000020.chb")).unwrap();
    assert!(s.field.values().iter().all(|v| *v == 1.0));
}

#[test]
fn tabulate_prints_the_table() {
    let out = chb(&[
        "tabulate-constitutive",
        "--config",
        config("n_sweep.toml").to_str().unwrap(),
        "--count",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,alpha,gamma,gamma_hat,beta_n,F_n");
    assert_eq!(lines.len(), 12);
    // alpha(1) = gamma(1) = 0 row is at s = 1
    let row: Vec<f64> = lines[6].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert_eq!(row[2], 0.0);
}

#[test]
fn sweep_p_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = chb(&[
        "sweep-p",
        "--config",
        config("p_sweep.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("p_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("p_sweep.json").is_file());
}
