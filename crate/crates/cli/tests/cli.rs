use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qspec_cli::config::ExperimentConfig;

fn qspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qspec")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qspec-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const QUBIT: &str = r#"
[units]
time = "arb"

[bath]
kind = "qubit"
a = 0.1
b = 1.0

[rim]
tau1 = 0.2

[protocol]
tau = 1.5
n_points = 32
"#;

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.bath.build().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 6);
}

#[test]
fn exact_single_point_writes_one_value() {
    let dir = scratch("single");
    let cfg = write(&dir, QUBIT);
    let out = dir.join("out");
    let run = qspec(&[
        "simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--sampling", "exact", "--n", "1",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(out.join("correlation.csv")).unwrap();
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1,"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn plan_prints_hoeffding_count() {
    let run = qspec(&["plan", "--delta", "0.02", "--epsilon", "0.1"]);
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    assert_eq!(text.lines().nth(1), Some("0.02,0.1,14979"));
    let json = qspec(&["plan", "--delta", "0.02", "--epsilon", "0.1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["n_samples"], 14979);
}

#[test]
fn invalid_config_exits_with_code_2() {
    let dir = scratch("bad");
    let cfg = write(&dir, &QUBIT.replace("tau1 = 0.2", "tau1 = -1.0"));
    assert_eq!(qspec(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write(&dir, &QUBIT.replace("[rim]", "[rim]\nunknown = 1"));
    assert_eq!(qspec(&["validate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write(&dir, "[bath\nkind = ");
    assert_eq!(qspec(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.join("absent.toml");
    assert_eq!(qspec(&["simulate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn rejected_values_exit_with_code_3() {
    let dir = scratch("range");
    let cfg = write(&dir, &QUBIT.replace("a = 0.1", "a = nan"));
    let run = qspec(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(qspec(&["plan", "--delta", "0", "--epsilon", "0.1"]).status.code(), Some(3));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn strict_aliasing_exits_with_numerical_code() {
    let dir = scratch("alias");
    let cfg = write(&dir, &QUBIT.replace("b = 1.0", "b = 3.0"));
    let relaxed = qspec(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(relaxed.status.success());
    assert!(String::from_utf8_lossy(&relaxed.stdout).contains("fail"));
    let strict = qspec(&["validate", "--config", cfg.to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(3));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn compare_with_single_sample_count() {
    let dir = scratch("compare");
    let body = format!(
        "{}\n[sampling]\nseed = 3\n\n[compare]\nn_samples = [1000]\ngamma_tau = [0.0]\ncorr_tau1_factors = [1.0]\n",
        QUBIT
    );
    let cfg = write(&dir, &body);
    let out = dir.join("out");
    let run = qspec(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains(",weak,") && text.contains(",corr,"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn empty_compare_grid_writes_header_only() {
    let dir = scratch("empty");
    let cfg = write(&dir, &format!("{QUBIT}\n[compare]\nn_samples = []\n"));
    let out = dir.join("out");
    let run = qspec(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("gamma_tau,method,"));
    let _ = std::fs::remove_dir_all(dir);
}
