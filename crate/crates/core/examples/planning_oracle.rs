//! The planning oracle: the maximizer of the KL-regularized objective is the
//! Gibbs policy pi(a|x) proportional to pi0(a|x) exp(eta R(x, a)).

use klreg::bandit::{
    planning_oracle, ActionSpace, BanditInstance, Context, ContextSpace, NoiseModel, Policy,
    ReferencePolicy, RewardModel,
};
use klreg::eval::{objective_q, optimal_value, suboptimality_gap, EvalConfig};

fn main() {
    // one context, two actions, rewards (1, 0)
    let instance = BanditInstance::new(
        ContextSpace::finite_uniform(1).unwrap(),
        ActionSpace::new(2).unwrap(),
        RewardModel::tabular(vec![vec![1.0, 0.0]], 1.0).unwrap(),
        NoiseModel::Bernoulli,
        ReferencePolicy::uniform(2),
    )
    .unwrap();
    let ctx = Context::indexed(0);
    let exact = EvalConfig::default();

    println!("eta     pi*(a=0)   Q(pi*)     log-normalizer/eta   gap(pi0)");
    for eta in [0.1, 0.5, 1.0, 2.0, 8.0, 50.0] {
        let pi = planning_oracle(instance.truth(), instance.reference(), eta).unwrap();
        let q = objective_q(&instance, &pi, eta, &exact).unwrap().value;
        let v = optimal_value(&instance, instance.truth(), eta, &exact).unwrap().value;
        let gap = suboptimality_gap(&instance, instance.reference(), eta, &exact).unwrap();
        println!(
            "{eta:<7} {:<10.6} {q:<10.6} {v:<20.6} {:.6}",
            pi.probs(&ctx)[0],
            gap.gap
        );
    }

    // large rewards stay finite thanks to max-subtraction
    let huge = RewardModel::tabular(vec![vec![1e4, 0.0]], 1e4).unwrap();
    let pi = planning_oracle(&huge, instance.reference(), 10.0).unwrap();
    println!("\nR = (1e4, 0), eta = 10: pi = {:?}", pi.probs(&ctx));

    // a skewed reference policy tilts the solution
    let skewed = ReferencePolicy::table(vec![vec![0.1, 0.9]]).unwrap();
    let pi = planning_oracle(instance.truth(), &skewed, 1.0).unwrap();
    println!("pi0 = (0.1, 0.9), eta = 1: pi = {:?}", pi.probs(&ctx));
}
