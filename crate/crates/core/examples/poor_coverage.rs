//! Mixed-policy sampling against the offline baseline when the reference
//! policy rarely plays the best action: stage 2 collects the data that the
//! reference policy misses.

use klreg::algo::{AlgoConfig, Algorithm};
use klreg::bandit::{
    random::random_table, ActionSpace, BanditInstance, ContextSpace, NoiseModel, ReferencePolicy,
    RewardModel,
};
use klreg::eval::{suboptimality_gap, EvalConfig};
use klreg::seed::{derive_rng, Purpose};

fn instance(repeat: u64) -> BanditInstance {
    let (m, a) = (4, 5);
    let table = random_table(m, a, &mut derive_rng(1, repeat, 0, Purpose::Truth));
    // 2% on the best action, the rest spread evenly
    let rows = table
        .iter()
        .map(|row| {
            let best = (0..a).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
            (0..a)
                .map(|k| if k == best { 0.02 } else { 0.98 / (a - 1) as f64 })
                .collect()
        })
        .collect();
    BanditInstance::new(
        ContextSpace::finite_uniform(m).unwrap(),
        ActionSpace::new(a).unwrap(),
        RewardModel::tabular(table, 1.0).unwrap(),
        NoiseModel::Bernoulli,
        ReferencePolicy::table(rows).unwrap(),
    )
    .unwrap()
}

fn main() {
    let eta = 8.0;
    let repeats = 20;
    for (mixed, offline) in [
        (Algorithm::Tmps, Algorithm::Offline),
        (Algorithm::TmpsPf, Algorithm::OfflinePf),
    ] {
        for total in [2000, 8000] {
            let (mut a, mut b) = (0.0, 0.0);
            for r in 0..repeats {
                let inst = instance(r);
                let cfg = AlgoConfig::new(eta, total / 2, total / 2, mixed.feedback());
                let gap = |algo: Algorithm| {
                    let out = algo
                        .run(&inst, &cfg, &mut derive_rng(1, r, 1, Purpose::Sampling))
                        .unwrap();
                    suboptimality_gap(&inst, &out.policy, eta, &EvalConfig::default())
                        .unwrap()
                        .gap
                };
                a += gap(mixed);
                b += gap(offline);
            }
            let k = repeats as f64;
            println!(
                "{mixed:<8} T={total:<5} mixed {:.3e}  {offline:<10} {:.3e}  ratio {:.2}",
                a / k,
                b / k,
                a / b
            );
        }
    }
}
