//! Coverage coefficients of the reference policy: D^2, its centered version,
//! global coverage, and the local KL-ball bound.

use klreg::bandit::{
    random::sphere_linear_instance, ActionSpace, BanditInstance, ContextSpace, NoiseModel,
    ReferencePolicy, RewardModel,
};
use klreg::eval::{coverage_coefficients, CoverageConfig};
use klreg::seed::rng_from_seed;

fn main() {
    let tabular = |rows: Option<Vec<Vec<f64>>>| {
        BanditInstance::new(
            ContextSpace::finite_uniform(4).unwrap(),
            ActionSpace::new(2).unwrap(),
            RewardModel::tabular(vec![vec![0.5, 0.5]; 4], 1.0).unwrap(),
            NoiseModel::Bernoulli,
            rows.map_or(ReferencePolicy::uniform(2), |r| ReferencePolicy::table(r).unwrap()),
        )
        .unwrap()
    };
    let cfg = CoverageConfig::default();

    let uniform = tabular(None);
    let r = coverage_coefficients(&uniform, uniform.model_class(), 1.0, &cfg).unwrap();
    println!("tabular M=4 A=2, uniform pi0:   d2={} d2_centered={:.6} c_global={}", r.d2, r.d2_centered, r.c_global);

    let skewed = tabular(Some(vec![vec![0.9, 0.1]; 4]));
    let r = coverage_coefficients(&skewed, skewed.model_class(), 1.0, &cfg).unwrap();
    println!("tabular M=4 A=2, pi0=(0.9,0.1): d2={:.3} d2_centered={:.3} c_global={:.3}", r.d2, r.d2_centered, r.c_global);

    let missing = tabular(Some(vec![vec![1.0, 0.0]; 4]));
    let r = coverage_coefficients(&missing, missing.model_class(), 1.0, &cfg).unwrap();
    println!("tabular M=4 A=2, pi0=(1,0):     d2={} c_global={}", r.d2, r.c_global);

    let sphere = sphere_linear_instance(10, 5, 5.0, 0.1, &mut rng_from_seed(0)).unwrap();
    for eta in [0.25, 1.0] {
        let r = coverage_coefficients(&sphere, sphere.model_class(), eta, &cfg).unwrap();
        println!(
            "sphere d=10 A=5, eta={eta}: d2~{:.2} (sampled: {}) d2_centered~{:.2} c_global={} rho={} c_local_bound={:.3e}",
            r.d2, r.sampled, r.d2_centered, r.c_global, r.rho, r.c_local_bound
        );
    }
}
