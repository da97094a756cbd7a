//! Two-stage mixed-policy sampling with reward feedback on a linear bandit,
//! against the offline baseline that spends the whole budget on pi0.

use klreg::algo::{offline_run, tmps_run, AlgoConfig, Feedback};
use klreg::bandit::random::sphere_linear_instance;
use klreg::eval::{suboptimality_gap, EvalConfig};
use klreg::seed::{derive_rng, derive_seed, Purpose};

fn main() {
    let seed = 42;
    let eta = 1.0;
    let mut truth_rng = derive_rng(seed, 0, 0, Purpose::Truth);
    // d = 10, 5 actions, embeddings on the radius-5 sphere, Gaussian noise 0.1
    let instance = sphere_linear_instance(10, 5, 5.0, 0.1, &mut truth_rng).unwrap();
    let eval = EvalConfig {
        n_eval: 50_000,
        seed: derive_seed(seed, 0, 0, Purpose::Evaluation),
    };

    println!("total   tmps gap      offline gap");
    for total in [256, 1024, 4096] {
        let cfg = AlgoConfig::new(eta, total / 2, total / 2, Feedback::Reward);
        let mixed = tmps_run(&instance, &cfg, &mut derive_rng(seed, 0, 1, Purpose::Sampling)).unwrap();
        let offline =
            offline_run(&instance, &cfg, &mut derive_rng(seed, 0, 1, Purpose::Sampling)).unwrap();
        let a = suboptimality_gap(&instance, &mixed.policy, eta, &eval).unwrap();
        let b = suboptimality_gap(&instance, &offline.policy, eta, &eval).unwrap();
        println!(
            "{total:<7} {:.3e} ± {:.1e}   {:.3e} ± {:.1e}",
            a.gap,
            a.stderr(),
            b.gap,
            b.stderr()
        );
    }

    let cfg = AlgoConfig::new(eta, 512, 512, Feedback::Reward);
    let out = tmps_run(&instance, &cfg, &mut derive_rng(seed, 0, 2, Purpose::Sampling)).unwrap();
    println!(
        "\nstage 1: {} samples, stage 2: {} samples",
        out.trace.stage1.len(),
        out.trace.stage2.len()
    );
    println!("final fit clamped: {}", out.trace.final_fit.clamped);
}
