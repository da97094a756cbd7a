//! Numerical check of the gap decomposition along the path from the true
//! reward to an estimate.

use klreg::bandit::{random::random_table, random::random_tabular_instance, RewardModel};
use klreg::eval::decomposition_check;
use klreg::seed::rng_from_seed;

fn main() {
    let mut rng = rng_from_seed(3);
    println!("eta   gap          J residual   gamma     MVT residual  eta*max E[D^2]  no-gamma form");
    for eta in [0.5, 1.0, 4.0, 0.5, 1.0, 4.0] {
        let instance = random_tabular_instance(3, 3, &mut rng).unwrap();
        let estimate = RewardModel::tabular(random_table(3, 3, &mut rng), 1.0).unwrap();
        let r = decomposition_check(&instance, &estimate, eta).unwrap();
        println!(
            "{eta:<5} {:<12.5e} {:<12.2e} {:<9.5} {:<13.2e} {:<15.5e} {:.2e}",
            r.gap,
            r.j_identity_residual,
            r.mvt_gamma,
            r.mvt_residual,
            r.second_moment_bound,
            r.variance_form_residual,
        );
    }
}
