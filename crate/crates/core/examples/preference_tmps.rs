//! Two-stage sampling from preference feedback: Bradley-Terry labels,
//! maximum-likelihood fit, planning.

use klreg::algo::{offline_run, tmps_pf_run, AlgoConfig, Feedback};
use klreg::bandit::{random::random_tabular_instance, Policy};
use klreg::eval::{suboptimality_gap, EvalConfig};
use klreg::seed::{derive_rng, Purpose};

fn main() {
    let eta = 2.0;
    let instance = random_tabular_instance(3, 4, &mut derive_rng(5, 0, 0, Purpose::Truth)).unwrap();
    let exact = EvalConfig::default();

    let cfg = AlgoConfig::new(eta, 2000, 2000, Feedback::Preference);
    let mixed = tmps_pf_run(&instance, &cfg, &mut derive_rng(5, 0, 1, Purpose::Sampling)).unwrap();
    let offline = offline_run(&instance, &cfg, &mut derive_rng(5, 0, 1, Purpose::Sampling)).unwrap();

    let fit = &mixed.trace.final_fit;
    println!(
        "MLE: {} Newton iterations, gradient max-norm {:.2e}, separable: {}",
        fit.iterations, fit.grad_max_norm, fit.separable
    );

    // the likelihood only identifies reward differences, so compare centered rows
    let support = instance.contexts().support().unwrap();
    for (x, (_, ctx)) in support.iter().enumerate() {
        let truth = instance.truth().values(ctx);
        let est = fit.model.values(ctx);
        let mean_t = truth.iter().sum::<f64>() / truth.len() as f64;
        let mean_e = est.iter().sum::<f64>() / est.len() as f64;
        let centered = |v: &[f64], m: f64| v.iter().map(|r| format!("{:+.3}", r - m)).collect::<Vec<_>>();
        println!("x={x}  true {:?}", centered(&truth, mean_t));
        println!("      est  {:?}", centered(&est, mean_e));
        println!("      pi_hat {:?}", mixed.policy.probs(ctx).iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>());
    }

    let a = suboptimality_gap(&instance, &mixed.policy, eta, &exact).unwrap();
    let b = suboptimality_gap(&instance, &offline.policy, eta, &exact).unwrap();
    println!("\ngap: tmps_pf {:.3e}, offline {:.3e}", a.gap, b.gap);
}
