//! Lower-bound hard instances: the Bernoulli KL bounds behind them and the
//! gap of a learner as the budget grows.

use klreg::algo::Algorithm;
use klreg::hardcase::{kl_bound_check, lower_bound_probe, Flavor, ProbeConfig};

fn main() {
    println!("c      KL reward    16c^2    KL pref      c^2");
    let grid: Vec<f64> = [0.01, 0.05, 0.1, 0.15, 0.2, 0.24].to_vec();
    for r in kl_bound_check(&grid).unwrap() {
        println!(
            "{:<6} {:<12.6} {:<8.4} {:<12.6} {:.4}",
            r.c, r.reward_kl, r.reward_bound, r.preference_kl, r.preference_bound
        );
    }

    let eta: f64 = 4.0;
    let epsilon = 0.001;
    let c = 8.0 * (epsilon / eta).sqrt();
    println!("\nc = 8 sqrt(eps/eta) = {c:.5}");

    for (flavor, algorithm) in [
        (Flavor::RewardFeedback, Algorithm::Tmps),
        (Flavor::PreferenceFeedback, Algorithm::TmpsPf),
    ] {
        for contexts in [8, 16] {
            let report = lower_bound_probe(&ProbeConfig {
                contexts,
                c,
                flavor,
                eta,
                algorithm,
                totals: vec![0, 64, 256, 1024, 4096],
                repeats: 10,
                seed: 1,
            })
            .unwrap();
            println!(
                "\n{algorithm}, M={contexts} (covering number {}, log2|Theta| = {})",
                report.cover_count, report.log2_theta_count
            );
            for p in &report.points {
                println!("  T={:<5} mean gap {:.3e} ± {:.1e}", p.total, p.mean_gap, p.stderr);
            }
        }
    }
}
