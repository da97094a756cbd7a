use klreg::bandit::{
    collect_preferences, collect_rewards, random::sphere_linear_instance, Context, ContextSpace,
    ActionSpace, BanditInstance, ModelClass, NoiseModel, ReferencePolicy, RewardModel,
    RewardSample,
};
use klreg::estimate::{bt_gradient, bt_log_likelihood, bt_mle_fit, least_squares_fit, FitConfig};
use klreg::seed::rng_from_seed;
use rand::Rng;

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

fn normal_equations(samples: &[RewardSample], action: usize, dim: usize, ridge: f64) -> Vec<f64> {
    let mut g = vec![vec![0.0; dim]; dim];
    let mut v = vec![0.0; dim];
    for s in samples.iter().filter(|s| s.action == action) {
        let x = &s.context.features;
        for i in 0..dim {
            v[i] += s.reward * x[i];
            for j in 0..dim {
                g[i][j] += x[i] * x[j];
            }
        }
    }
    for (i, row) in g.iter_mut().enumerate() {
        row[i] += ridge;
    }
    solve(g, v)
}

#[test]
fn linear_fit_matches_normal_equations() {
    let mut rng = rng_from_seed(11);
    let inst = sphere_linear_instance(4, 3, 2.0, 0.5, &mut rng).unwrap();
    let samples = collect_rewards(&inst, inst.reference(), 400, &mut rng);
    for ridge in [0.0, 1e-3, 2.0] {
        let fit = least_squares_fit(&samples, inst.model_class(), &FitConfig::default().with_ridge(ridge))
            .unwrap();
        for a in 0..3 {
            let oracle = normal_equations(&samples, a, 4, ridge);
            for (k, want) in oracle.iter().enumerate() {
                let got = fit.model.params()[a * 4 + k];
                assert!((got - want).abs() < 1e-10, "ridge {ridge} action {a} coord {k}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn least_squares_residuals_are_orthogonal_to_features() {
    let mut rng = rng_from_seed(12);
    let inst = sphere_linear_instance(5, 2, 3.0, 1.0, &mut rng).unwrap();
    let samples = collect_rewards(&inst, inst.reference(), 300, &mut rng);
    let fit = least_squares_fit(&samples, inst.model_class(), &FitConfig::default().with_ridge(0.0)).unwrap();
    for a in 0..2 {
        let mut dot = vec![0.0; 5];
        for s in samples.iter().filter(|s| s.action == a) {
            let resid = s.reward - fit.model.value(&s.context, a);
            for (d, x) in dot.iter_mut().zip(&s.context.features) {
                *d += resid * x;
            }
        }
        assert!(dot.iter().all(|d| d.abs() < 1e-8), "{dot:?}");
    }
}

#[test]
fn noiseless_linear_fit_recovers_truth() {
    let mut rng = rng_from_seed(13);
    let inst = sphere_linear_instance(6, 4, 5.0, 0.0, &mut rng).unwrap();
    let samples = collect_rewards(&inst, inst.reference(), 200, &mut rng);
    let fit = least_squares_fit(&samples, inst.model_class(), &FitConfig::default().with_ridge(0.0)).unwrap();
    for (got, want) in fit.model.params().iter().zip(inst.truth().params()) {
        assert!((got - want).abs() < 1e-8);
    }
}

#[test]
fn tabular_fit_is_cell_mean() {
    let class = ModelClass::Tabular { contexts: 2, actions: 2 };
    let samples = vec![
        RewardSample { context: Context::indexed(0), action: 1, reward: 0.2 },
        RewardSample { context: Context::indexed(0), action: 1, reward: 0.6 },
        RewardSample { context: Context::indexed(1), action: 0, reward: -0.5 },
    ];
    let fit = least_squares_fit(&samples, class, &FitConfig::default().with_ridge(0.0).with_bound(1.0)).unwrap();
    assert_eq!(fit.model.params(), &[0.0, 0.4, -0.5, 0.0]);
}

fn bt_instance(contexts: usize, actions: usize, seed: u64) -> BanditInstance {
    let mut rng = rng_from_seed(seed);
    let table = (0..contexts)
        .map(|_| (0..actions).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    BanditInstance::new(
        ContextSpace::finite_uniform(contexts).unwrap(),
        ActionSpace::new(actions).unwrap(),
        RewardModel::tabular(table, 1.0).unwrap(),
        NoiseModel::Bernoulli,
        ReferencePolicy::uniform(actions),
    )
    .unwrap()
}

#[test]
fn bt_mle_beats_truth_on_its_own_sample() {
    let inst = bt_instance(3, 3, 21);
    let mut rng = rng_from_seed(22);
    let samples = collect_preferences(&inst, inst.reference(), 2000, &mut rng);
    let fit = bt_mle_fit(&samples, inst.model_class(), &FitConfig::default()).unwrap();
    assert!(fit.converged);
    let ridge = FitConfig::default().ridge;
    assert!(bt_log_likelihood(&samples, &fit.unclamped, ridge) >= bt_log_likelihood(&samples, inst.truth(), ridge));
    let g = bt_gradient(&samples, &fit.unclamped, ridge);
    assert!(g.iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn bt_mle_recovers_reward_differences() {
    let inst = bt_instance(3, 3, 31);
    let mut rng = rng_from_seed(32);
    let samples = collect_preferences(&inst, inst.reference(), 50_000, &mut rng);
    let fit = bt_mle_fit(&samples, inst.model_class(), &FitConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    for x in 0..3 {
        let ctx = Context::indexed(x);
        for a in 0..3 {
            for b in 0..3 {
                let want = inst.truth().value(&ctx, a) - inst.truth().value(&ctx, b);
                let got = fit.model.value(&ctx, a) - fit.model.value(&ctx, b);
                worst = worst.max((got - want).abs());
            }
        }
    }
    println!("max difference error {worst:.4}");
    assert!(worst <= 0.05, "{worst}");
}
