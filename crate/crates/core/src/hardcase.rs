//! Two-context-class hard instances behind the lower bounds, the Bernoulli
//! KL bounds they rely on, and an empirical gap-versus-budget probe.

use rand::Rng;
use rayon::prelude::*;

use crate::algo::{AlgoConfig, Algorithm};
use crate::bandit::{
    sigmoid, ActionSpace, BanditInstance, ContextSpace, NoiseModel, ReferencePolicy, RewardModel,
};
use crate::error::{Error, Result};
use crate::eval::{suboptimality_gap, EvalConfig};
use crate::seed::{derive_rng, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// Rewards `1/2 + c` and `1/2` observed through Bernoulli noise.
    RewardFeedback,
    /// Rewards `c` and `0` observed through Bradley-Terry comparisons.
    PreferenceFeedback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HardInstanceSpec {
    pub contexts: usize,
    /// Reward gap in `(0, 1/4)`.
    pub c: f64,
    /// Optimal action (0 or 1) per context.
    pub theta_map: Vec<u8>,
    pub flavor: Flavor,
}

impl HardInstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.contexts < 2 {
            return Err(Error::InvalidInstance(
                "hard instances need at least two contexts".into(),
            ));
        }
        if !(self.c > 0.0 && self.c < 0.25) {
            return Err(Error::OutOfRange(self.c));
        }
        if self.theta_map.len() != self.contexts || self.theta_map.iter().any(|&t| t > 1) {
            return Err(Error::InvalidInstance(
                "theta_map must hold one 0/1 entry per context".into(),
            ));
        }
        Ok(())
    }

    pub fn random_theta_map<R: Rng + ?Sized>(contexts: usize, rng: &mut R) -> Vec<u8> {
        (0..contexts).map(|_| rng.random_range(0..2u8)).collect()
    }

    /// Rewards of the (optimal, other) action.
    pub fn levels(&self) -> (f64, f64) {
        match self.flavor {
            Flavor::RewardFeedback => (0.5 + self.c, 0.5),
            Flavor::PreferenceFeedback => (self.c, 0.0),
        }
    }
}

/// Uniform contexts, two actions, uniform `pi0`, reward bound 1.
pub fn build_hard_instance(spec: &HardInstanceSpec) -> Result<BanditInstance> {
    spec.validate()?;
    let (hi, lo) = spec.levels();
    let table = spec
        .theta_map
        .iter()
        .map(|&t| if t == 0 { vec![hi, lo] } else { vec![lo, hi] })
        .collect();
    BanditInstance::new(
        ContextSpace::finite_uniform(spec.contexts)?,
        ActionSpace::new(2)?,
        RewardModel::tabular(table, 1.0)?,
        // labels for the preference flavor come from the BT oracle instead
        NoiseModel::Bernoulli,
        ReferencePolicy::uniform(2),
    )
}

/// `KL(Bern(p) || Bern(q))`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlBoundRow {
    pub c: f64,
    /// `KL(Bern(1/2 - c) || Bern(1/2 + c))`.
    pub reward_kl: f64,
    pub reward_bound: f64,
    /// `KL(Bern(sigma(c)) || Bern(sigma(-c)))`.
    pub preference_kl: f64,
    pub preference_bound: f64,
}

impl KlBoundRow {
    pub fn holds(&self) -> bool {
        self.reward_kl <= self.reward_bound && self.preference_kl <= self.preference_bound
    }
}

/// Evaluates both KLs against `16 c^2` and `c^2` on each grid point in `[0, 1/4)`.
pub fn kl_bound_check(c_grid: &[f64]) -> Result<Vec<KlBoundRow>> {
    c_grid
        .iter()
        .map(|&c| {
            if !(0.0..0.25).contains(&c) {
                return Err(Error::OutOfRange(c));
            }
            Ok(KlBoundRow {
                c,
                reward_kl: bernoulli_kl(0.5 - c, 0.5 + c),
                reward_bound: 16.0 * c * c,
                preference_kl: bernoulli_kl(sigmoid(c), sigmoid(-c)),
                preference_bound: c * c,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub contexts: usize,
    pub c: f64,
    pub flavor: Flavor,
    pub eta: f64,
    pub algorithm: Algorithm,
    /// Total sample budgets; 0 means no data and the reference policy.
    pub totals: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbePoint {
    pub total: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub points: Vec<ProbePoint>,
    /// Covering number of the class at scale below `c`, which is `M`.
    pub cover_count: usize,
    /// `log2 |Theta| = M` for the `2^M` candidate truths.
    pub log2_theta_count: usize,
}

/// Mean gap of `algorithm` on hard instances with a fresh uniformly random
/// `theta_map` per repeat. Two-stage runs split a budget `T` as
/// `m = ceil(T/2)`, `n = T - m`.
pub fn lower_bound_probe(cfg: &ProbeConfig) -> Result<ProbeReport> {
    if cfg.repeats == 0 || cfg.totals.is_empty() {
        return Err(Error::InvalidArgument(
            "probe needs at least one repeat and one budget".into(),
        ));
    }
    let wants = match cfg.flavor {
        Flavor::RewardFeedback => crate::algo::Feedback::Reward,
        Flavor::PreferenceFeedback => crate::algo::Feedback::Preference,
    };
    if cfg.algorithm.feedback() != wants {
        return Err(Error::InvalidArgument(format!(
            "{} does not match the instance flavor",
            cfg.algorithm
        )));
    }
    let exact = EvalConfig::default();
    let gaps: Vec<Vec<f64>> = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let mut truth_rng = derive_rng(cfg.seed, r as u64, 0, Purpose::Truth);
            let spec = HardInstanceSpec {
                contexts: cfg.contexts,
                c: cfg.c,
                theta_map: HardInstanceSpec::random_theta_map(cfg.contexts, &mut truth_rng),
                flavor: cfg.flavor,
            };
            let instance = build_hard_instance(&spec)?;
            cfg.totals
                .iter()
                .map(|&total| {
                    if total == 0 {
                        return Ok(suboptimality_gap(&instance, instance.reference(), cfg.eta, &exact)?.gap);
                    }
                    let (m, n) = if cfg.algorithm.is_offline() {
                        (total, 0)
                    } else {
                        let m = total.div_ceil(2);
                        (m, total - m)
                    };
                    let algo = AlgoConfig::new(cfg.eta, m, n, cfg.algorithm.feedback());
                    let mut rng = derive_rng(cfg.seed, r as u64, 1, Purpose::Sampling);
                    let out = cfg.algorithm.run(&instance, &algo, &mut rng)?;
                    Ok(suboptimality_gap(&instance, &out.policy, cfg.eta, &exact)?.gap)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let k = cfg.repeats as f64;
    let points = cfg
        .totals
        .iter()
        .enumerate()
        .map(|(i, &total)| {
            let column: Vec<f64> = gaps.iter().map(|g| g[i]).collect();
            let mean = column.iter().sum::<f64>() / k;
            let std = if cfg.repeats > 1 {
                (column.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            ProbePoint {
                total,
                mean_gap: mean,
                std_gap: std,
                stderr: std / k.sqrt(),
            }
        })
        .collect();
    Ok(ProbeReport {
        points,
        cover_count: cfg.contexts,
        log2_theta_count: cfg.contexts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::Policy;

    fn spec(c: f64, flavor: Flavor) -> HardInstanceSpec {
        HardInstanceSpec {
            contexts: 8,
            c,
            theta_map: vec![0, 1, 1, 0, 0, 0, 1, 0],
            flavor,
        }
    }

    #[test]
    fn reward_table_levels() {
        let inst = build_hard_instance(&spec(0.1, Flavor::RewardFeedback)).unwrap();
        let params = inst.truth().params();
        assert_eq!(params.iter().filter(|&&v| v == 0.6).count(), 8);
        assert_eq!(params.iter().filter(|&&v| v == 0.5).count(), 8);
    }

    #[test]
    fn optimal_mass_closed_form() {
        let eta = 4.0;
        let c = 0.2;
        for flavor in [Flavor::RewardFeedback, Flavor::PreferenceFeedback] {
            let s = spec(c, flavor);
            let inst = build_hard_instance(&s).unwrap();
            let pi = inst.optimal_policy(eta).unwrap();
            let expected = (eta * c).exp() / ((eta * c).exp() + 1.0);
            for (x, &t) in s.theta_map.iter().enumerate() {
                let p = pi.probs(&inst.contexts().support().unwrap()[x].1);
                assert!((p[t as usize] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn flavors_share_optimal_policy() {
        let a = build_hard_instance(&spec(0.15, Flavor::RewardFeedback)).unwrap();
        let b = build_hard_instance(&spec(0.15, Flavor::PreferenceFeedback)).unwrap();
        let pa = a.optimal_policy(2.0).unwrap();
        let pb = b.optimal_policy(2.0).unwrap();
        for (_, ctx) in a.contexts().support().unwrap() {
            let (u, v) = (pa.probs(&ctx), pb.probs(&ctx));
            for k in 0..2 {
                assert!((u[k] - v[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kl_at_point_two() {
        let rows = kl_bound_check(&[0.0, 0.2]).unwrap();
        assert_eq!(rows[0].reward_kl, 0.0);
        assert_eq!(rows[0].preference_kl, 0.0);
        assert!((rows[1].reward_kl - 0.4 * (7.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((rows[1].reward_kl - 0.338919).abs() < 1e-6);
        // c tanh(c/2)
        assert!((rows[1].preference_kl - 0.2 * (0.1f64).tanh()).abs() < 1e-15);
        assert!(rows.iter().all(KlBoundRow::holds));
    }

    #[test]
    fn kl_rejects_out_of_range() {
        assert!(matches!(kl_bound_check(&[0.25]), Err(Error::OutOfRange(_))));
        assert!(matches!(kl_bound_check(&[-0.01]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(0.1, Flavor::RewardFeedback);
        s.c = 0.3;
        assert!(build_hard_instance(&s).is_err());
        s.c = 0.1;
        s.theta_map.pop();
        assert!(build_hard_instance(&s).is_err());
        let one = HardInstanceSpec {
            contexts: 1,
            c: 0.1,
            theta_map: vec![0],
            flavor: Flavor::RewardFeedback,
        };
        assert!(build_hard_instance(&one).is_err());
    }

    #[test]
    fn epsilon_scaled_gap_parameter() {
        let c = 8.0 * (0.001f64 / 4.0).sqrt();
        assert!((c - 0.126491).abs() < 1e-6 && c < 0.25);
    }

    #[test]
    fn zero_budget_is_reference_gap() {
        let cfg = ProbeConfig {
            contexts: 4,
            c: 0.2,
            flavor: Flavor::RewardFeedback,
            eta: 2.0,
            algorithm: Algorithm::Tmps,
            totals: vec![0],
            repeats: 3,
            seed: 5,
        };
        let r = lower_bound_probe(&cfg).unwrap();
        // (1/eta) KL(uniform || pi*), identical for every theta_map
        let p = (2.0f64 * 0.2).exp() / ((2.0f64 * 0.2).exp() + 1.0);
        let expected = bernoulli_kl(0.5, p) / 2.0;
        assert!((r.points[0].mean_gap - expected).abs() < 1e-12);
        assert_eq!(r.cover_count, 4);
    }
}
