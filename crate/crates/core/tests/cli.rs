use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/paper.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nanofiber")).args(args).output().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr is empty");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

#[test]
fn empty_config_lists_every_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "mode"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "ConfigInvalid");
    let details: Vec<String> = err["details"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    for key in ["fiber.radius_nm", "vdw.c3_ground_khz_um3", "budget.n_atoms", "scan.points"] {
        assert!(details.iter().any(|d| d.contains(key)), "{key} not reported in {details:?}");
    }
    assert!(details.len() > 40);
}

#[test]
fn unknown_key_is_rejected() {
    let out = run(&[
        "--config",
        default_config().to_str().unwrap(),
        "--set",
        "fiber.radius_typo=3",
        "mode",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert!(err["details"].to_string().contains("fiber.radius_typo"));
}

#[test]
fn missing_config_file() {
    let out = run(&["--config", "/nonexistent/cfg.toml", "mode"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "ConfigUnreadable");
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn invalid_values_exit_one() {
    let out = run(&[
        "--config",
        default_config().to_str().unwrap(),
        "--set",
        "budget.n_atoms=-1",
        "budget",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compute_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // V > 2.405: more than one guided mode
    let out = run(&[
        "--config",
        default_config().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "fiber.radius_nm=2000",
        "mode",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "SubcommandFailed");
    assert_eq!(err["command"], "mode");

    let out = run(&["--config", default_config().to_str().unwrap(), "--out", "/proc/forbidden/out", "mode"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "OutputUnwritable");
}

#[test]
fn budget_json_reports_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--config",
        default_config().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "budget",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("budget.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let n_p = v["chain"]["photon_count_per_s"].as_f64().unwrap();
    assert!((n_p / 4.6e5 - 1.0).abs() < 0.03);
    let n = v["probe"]["inference"]["n_atoms"].as_f64().unwrap();
    assert!((n / 0.07 - 1.0).abs() < 0.2);
    assert_eq!(v["meta"]["command"], "budget");
    assert_eq!(v["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn csv_artifacts_carry_provenance_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--config",
        default_config().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "coupling",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("coupling.csv")).unwrap();
    assert!(text.starts_with("# tool:"));
    assert!(text.lines().any(|l| l.starts_with("# config_sha256:")));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("r_over_a"));
}

#[test]
fn noisy_scan_requires_a_seed_and_is_reproducible() {
    let cfg = default_config();
    let args = |dir: &Path| {
        vec![
            "--config".to_string(),
            cfg.to_str().unwrap().to_string(),
            "--out".to_string(),
            dir.to_str().unwrap().to_string(),
            "--set".to_string(),
            "scan.noise_fraction=0.05".to_string(),
        ]
    };
    let a = tempfile::tempdir().unwrap();
    let mut no_seed = args(a.path());
    no_seed.push("scan".into());
    let out = Command::new(env!("CARGO_BIN_EXE_nanofiber")).args(&no_seed).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let mut seeded = args(dir);
        seeded.extend(["--seed".into(), "11".into(), "scan".into()]);
        let out = Command::new(env!("CARGO_BIN_EXE_nanofiber")).args(&seeded).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["scan.csv", "scan_fit.json", "decay.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical seeded runs");
    }
}
