use klreg::algo::Algorithm;
use klreg::hardcase::{
    bernoulli_kl, build_hard_instance, kl_bound_check, lower_bound_probe, Flavor,
    HardInstanceSpec, ProbeConfig,
};
use klreg::bandit::{sigmoid, Context};

fn probe(contexts: usize, algorithm: Algorithm, flavor: Flavor, totals: Vec<usize>) -> ProbeConfig {
    ProbeConfig {
        contexts,
        c: 0.2,
        flavor,
        eta: 4.0,
        algorithm,
        totals,
        repeats: 40,
        seed: 17,
    }
}

#[test]
fn probe_gap_falls_with_budget() {
    for (alg, flavor) in [
        (Algorithm::Tmps, Flavor::RewardFeedback),
        (Algorithm::OfflinePf, Flavor::PreferenceFeedback),
    ] {
        let report = lower_bound_probe(&probe(4, alg, flavor, vec![16, 64, 256, 1024])).unwrap();
        let means: Vec<f64> = report.points.iter().map(|p| p.mean_gap).collect();
        let inversions = means.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(inversions <= 1, "{alg}: {means:?}");
        assert!(means[3] < means[0], "{alg}: {means:?}");
        assert_eq!(report.cover_count, 4);
        assert_eq!(report.log2_theta_count, 4);
    }
}

#[test]
fn more_contexts_are_not_easier() {
    let small = lower_bound_probe(&probe(4, Algorithm::Tmps, Flavor::RewardFeedback, vec![128])).unwrap();
    let large = lower_bound_probe(&probe(8, Algorithm::Tmps, Flavor::RewardFeedback, vec![128])).unwrap();
    let (s, l) = (&small.points[0], &large.points[0]);
    assert!(l.mean_gap + l.stderr >= s.mean_gap - s.stderr, "{s:?} vs {l:?}");
}

#[test]
fn hard_instance_levels_follow_theta_map() {
    let spec = HardInstanceSpec {
        contexts: 3,
        c: 0.1,
        theta_map: vec![1, 0, 1],
        flavor: Flavor::RewardFeedback,
    };
    let inst = build_hard_instance(&spec).unwrap();
    for (x, &bit) in spec.theta_map.iter().enumerate() {
        let ctx = Context::indexed(x);
        let (r0, r1) = (inst.truth().value(&ctx, 0), inst.truth().value(&ctx, 1));
        assert!((r0 - r1).abs() > 0.0);
        assert_eq!(r1 > r0, bit == 1, "context {x}");
    }
}

#[test]
fn kl_bounds_match_closed_forms() {
    let grid: Vec<f64> = (1..=24).map(|k| k as f64 / 100.0).collect();
    for row in kl_bound_check(&grid).unwrap() {
        let c = row.c;
        // KL(Bern(p)||Bern(1-p)) = (2p - 1) ln(p / (1 - p))
        let p = 0.5 - c;
        assert!((row.reward_kl - (2.0 * p - 1.0) * (p / (1.0 - p)).ln()).abs() < 1e-12);
        let s = sigmoid(c);
        assert!((row.preference_kl - (2.0 * s - 1.0) * (s / (1.0 - s)).ln()).abs() < 1e-12);
        assert!(row.holds());
        assert!(row.preference_kl <= c * c && row.reward_kl <= 16.0 * c * c);
    }
    assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
    assert!(kl_bound_check(&[0.25]).is_err());
}
