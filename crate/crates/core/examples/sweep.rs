//! A configured sweep written to CSV, then read back.
//!
//! `cargo run --release --example sweep -- configs/sphere_linear.toml out/sphere`

use std::path::PathBuf;

use klreg::experiment::{cmd_run, csvio::read_raw, ExperimentConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path.as_ref()).unwrap(),
        None => ExperimentConfig::from_toml(
            r#"
            seed = 1
            repeats = 3
            n_eval = 20000
            [instance]
            contexts = "finite"
            count = 4
            actions = 3
            reference = "random"
            [sweep]
            etas = [1.0, 4.0]
            grid = [[64, 64], [256, 256]]
            algorithms = ["tmps", "offline", "tmps_pf", "offline_pf"]
            "#,
        )
        .unwrap(),
    };
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("klreg-sweep"));

    let files = cmd_run(&cfg, &out).unwrap();
    for s in &files.summary {
        println!(
            "{:<11} eta={:<4} T={:<5} mean gap {:.3e}  std {:.1e}  (n={})",
            s.algorithm.name(),
            s.eta,
            s.total,
            s.mean_gap,
            s.std_gap,
            s.count
        );
    }
    let back = read_raw(std::fs::File::open(&files.raw_path).unwrap()).unwrap();
    assert_eq!(back, files.rows);
    println!("\n{} rows in {}", back.len(), files.raw_path.display());
}
