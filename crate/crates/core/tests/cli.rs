use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_klreg");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn klreg(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("KLREG_OUT")
        .output()
        .expect("spawn klreg")
}

/// Data lines of a CSV, skipping comments and the header.
fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

fn patched_config(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(configs().join(name)).unwrap();
    assert!(text.contains(from), "{name} lacks {from:?}");
    let path = dir.join(name);
    fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn minimal_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("minimal.toml");
    let out = klreg(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_lines(&dir.path().join("raw.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("tmps,reward,"));
    assert_eq!(data_lines(&dir.path().join("summary.csv")).len(), 1);
}

#[test]
fn sphere_sweep_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched_config(dir.path(), "sphere_linear.toml", "n_eval = 100000", "n_eval = 2000");
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = klreg(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let first = run("a");
    let second = run("b");
    assert_eq!(data_lines(&first.join("raw.csv")).len(), 6 * 2 * 10);
    assert_eq!(data_lines(&first.join("summary.csv")).len(), 6 * 2);
    for file in ["raw.csv", "summary.csv"] {
        assert_eq!(fs::read(first.join(file)).unwrap(), fs::read(second.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn seed_flag_changes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("minimal.toml");
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = klreg(&["run", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read(out_dir.join("raw.csv")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = patched_config(dir.path(), "minimal.toml", "repeats = 1", "repeats = 1\nrepeets = 3");
    let out = klreg(&["run", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repeets"));

    let missing = dir.path().join("nope.toml");
    let out = klreg(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let zero = patched_config(dir.path(), "minimal.toml", "repeats = 1", "repeats = 0");
    let out = klreg(&["run", "--config", zero.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preference_figures_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("figures_preference.toml"))
        .unwrap()
        .replace("repeats = 10", "repeats = 2")
        .replace("n_eval = 100000", "n_eval = 1000")
        .replace("totals = [128, 256, 512, 1024, 2048, 4096]", "totals = [64, 128, 256]");
    let cfg = dir.path().join("fig.toml");
    fs::write(&cfg, text).unwrap();
    let out = klreg(&["figures", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let a = data_lines(&dir.path().join("fig_p_a.csv"));
    assert_eq!(a.len(), 3 * 2);
    assert!(a.iter().any(|l| l.contains("tmps_pf")) && a.iter().any(|l| l.contains("offline_pf")));

    let header = fs::read_to_string(dir.path().join("fig_p_b.csv")).unwrap();
    let header = header.lines().find(|l| !l.starts_with('#')).unwrap().to_owned();
    let eta_col = header.split(',').position(|c| c == "eta").unwrap();
    let mut etas: Vec<String> = data_lines(&dir.path().join("fig_p_b.csv"))
        .iter()
        .map(|l| l.split(',').nth(eta_col).unwrap().to_owned())
        .collect();
    etas.sort();
    etas.dedup();
    assert_eq!(etas.len(), 4);
}

#[test]
fn tabular_coverage_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("coverage_tabular.toml");
    let out = klreg(&["coverage", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("coverage.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()].parse::<f64>().unwrap();
    assert_eq!(col("d2"), 8.0);
    assert_eq!(col("c_global"), 2.0);
}

#[test]
fn output_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("minimal.toml");
    let out = Command::new(BIN)
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("KLREG_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("raw.csv").exists());
}

#[test]
fn fast_verification_passes() {
    let out = klreg(&["verify", "--level", "fast"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("gap_identity"));
}
