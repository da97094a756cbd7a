use rand::Rng;
use rand_distr::StandardNormal;

use crate::bandit::context::{Context, ContextSpace};
use crate::bandit::policy::{planning_oracle, Policy, ReferencePolicy, SoftmaxPolicy};
use crate::bandit::reward::{ModelClass, RewardModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionSpace {
    size: usize,
}

impl ActionSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidInstance("action space is empty".into()));
        }
        Ok(ActionSpace { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    /// `r ~ Bernoulli(R)`; only valid when every reward lies in `[0, 1]`.
    Bernoulli,
}

/// Logistic function, evaluated so that `sigmoid(u) + sigmoid(-u) == 1`
/// holds exactly in floating point.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        1.0 - 1.0 / (1.0 + u.exp())
    }
}

/// `log sigmoid(u)` without cancellation for large `|u|`.
pub fn log_sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        -(-u).exp().ln_1p()
    } else {
        u - u.exp().ln_1p()
    }
}

/// A KL-regularized contextual bandit: `(d0, A, theta*, noise, pi0)`.
#[derive(Clone, Debug)]
pub struct BanditInstance {
    contexts: ContextSpace,
    actions: ActionSpace,
    truth: RewardModel,
    noise: NoiseModel,
    reference: ReferencePolicy,
}

impl BanditInstance {
    pub fn new(
        contexts: ContextSpace,
        actions: ActionSpace,
        truth: RewardModel,
        noise: NoiseModel,
        reference: ReferencePolicy,
    ) -> Result<Self> {
        let a = actions.size();
        if truth.num_actions() != a || reference.num_actions() != a {
            return Err(Error::InvalidInstance(
                "truth, reference and action space disagree on the action count".into(),
            ));
        }
        match truth.class() {
            ModelClass::Tabular { contexts: m, .. } => {
                if contexts.count() != Some(m) {
                    return Err(Error::InvalidInstance(
                        "tabular truth needs a finite context space of matching size".into(),
                    ));
                }
                if truth.params().iter().any(|&r| r < 0.0 || r > truth.bound()) {
                    return Err(Error::InvalidInstance(
                        "tabular rewards must lie in [0, B]".into(),
                    ));
                }
            }
            ModelClass::Linear { dim, .. } => {
                if contexts.feature_dim() != Some(dim) {
                    return Err(Error::InvalidInstance(
                        "linear truth needs context features of matching dimension".into(),
                    ));
                }
                if truth.sup_norm() > truth.bound() * (1.0 + 1e-12) {
                    return Err(Error::InvalidInstance(
                        "embedding rows must have norm at most B".into(),
                    ));
                }
            }
        }
        if !truth.bound().is_finite() {
            return Err(Error::InvalidInstance("truth needs a finite bound B".into()));
        }
        if let Some(rows) = reference.rows() {
            if contexts.count() != Some(rows.len()) {
                return Err(Error::InvalidInstance(
                    "reference table needs a finite context space of matching size".into(),
                ));
            }
        }
        match noise {
            NoiseModel::Gaussian { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidInstance("noise sigma must be >= 0".into()));
                }
            }
            NoiseModel::Bernoulli => {
                let in_unit = matches!(truth.class(), ModelClass::Tabular { .. })
                    && truth.params().iter().all(|&r| (0.0..=1.0).contains(&r));
                if !in_unit {
                    return Err(Error::InvalidInstance(
                        "Bernoulli feedback needs tabular rewards in [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(BanditInstance {
            contexts,
            actions,
            truth,
            noise,
            reference,
        })
    }

    pub fn contexts(&self) -> &ContextSpace {
        &self.contexts
    }

    pub fn actions(&self) -> ActionSpace {
        self.actions
    }

    pub fn num_actions(&self) -> usize {
        self.actions.size()
    }

    pub fn truth(&self) -> &RewardModel {
        &self.truth
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn reference(&self) -> &ReferencePolicy {
        &self.reference
    }

    pub fn model_class(&self) -> ModelClass {
        self.truth.class()
    }

    /// Same instance with a different ground truth.
    pub fn with_truth(&self, truth: RewardModel) -> Result<Self> {
        BanditInstance::new(
            self.contexts.clone(),
            self.actions,
            truth,
            self.noise,
            self.reference.clone(),
        )
    }

    /// `pi*`, the planning oracle applied to the true reward.
    pub fn optimal_policy(&self, eta: f64) -> Result<SoftmaxPolicy> {
        planning_oracle(&self.truth, &self.reference, eta)
    }

    pub fn sample_context<R: Rng + ?Sized>(&self, rng: &mut R) -> Context {
        self.contexts.sample(rng)
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, ctx: &Context, action: usize, rng: &mut R) -> f64 {
        let mean = self.truth.value(ctx, action);
        match self.noise {
            NoiseModel::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sigma * z
            }
            NoiseModel::Bernoulli => {
                let u: f64 = rng.random();
                if u < mean {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Bradley-Terry probability that `first` is preferred to `second`.
    pub fn preference_probability(&self, ctx: &Context, first: usize, second: usize) -> f64 {
        bt_probability(&self.truth, ctx, first, second)
    }

    /// Query the preference oracle; `true` means `first` was preferred.
    pub fn sample_preference<R: Rng + ?Sized>(
        &self,
        ctx: &Context,
        first: usize,
        second: usize,
        rng: &mut R,
    ) -> bool {
        let p = self.preference_probability(ctx, first, second);
        let u: f64 = rng.random();
        u < p
    }

    pub fn sample_action<P: Policy + ?Sized, R: Rng + ?Sized>(
        &self,
        policy: &P,
        ctx: &Context,
        rng: &mut R,
    ) -> usize {
        crate::bandit::policy::sample_categorical(&policy.probs(ctx), rng)
    }
}

/// `sigma(R(x, a1) - R(x, a2))` under the given reward model.
pub fn bt_probability(reward: &RewardModel, ctx: &Context, first: usize, second: usize) -> f64 {
    sigmoid(reward.value(ctx, first) - reward.value(ctx, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn two_arm(r: [f64; 2], noise: NoiseModel) -> BanditInstance {
        BanditInstance::new(
            ContextSpace::finite_uniform(1).unwrap(),
            ActionSpace::new(2).unwrap(),
            RewardModel::tabular(vec![r.to_vec()], 1.0).unwrap(),
            noise,
            ReferencePolicy::uniform(2),
        )
        .unwrap()
    }

    #[test]
    fn zero_sigma_is_exact() {
        let inst = two_arm([0.3, 0.9], NoiseModel::Gaussian { sigma: 0.0 });
        let mut rng = rng_from_seed(1);
        let x = Context::indexed(0);
        for _ in 0..10 {
            assert_eq!(inst.sample_reward(&x, 1, &mut rng), 0.9);
        }
    }

    #[test]
    fn degenerate_bernoulli() {
        let inst = two_arm([1.0, 0.0], NoiseModel::Bernoulli);
        let mut rng = rng_from_seed(2);
        let x = Context::indexed(0);
        for _ in 0..1000 {
            assert_eq!(inst.sample_reward(&x, 0, &mut rng), 1.0);
            assert_eq!(inst.sample_reward(&x, 1, &mut rng), 0.0);
        }
    }

    #[test]
    fn bernoulli_mean() {
        let inst = two_arm([0.6, 0.0], NoiseModel::Bernoulli);
        let mut rng = rng_from_seed(3);
        let x = Context::indexed(0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| inst.sample_reward(&x, 0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.6).abs() <= 0.0025, "mean {mean}");
        // five standard errors
        assert!((mean - 0.6).abs() <= 5.0 * (0.24f64 / n as f64).sqrt());
    }

    #[test]
    fn gaussian_mean_within_five_stderr() {
        let inst = two_arm([0.4, 0.0], NoiseModel::Gaussian { sigma: 0.1 });
        let mut rng = rng_from_seed(4);
        let x = Context::indexed(0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| inst.sample_reward(&x, 0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.4).abs() <= 5.0 * 0.1 / (n as f64).sqrt());
    }

    #[test]
    fn preference_probabilities() {
        let inst = two_arm([1.0, 0.0], NoiseModel::Bernoulli);
        let x = Context::indexed(0);
        let p = inst.preference_probability(&x, 0, 1);
        assert!((p - 0.73106).abs() < 1e-5);
        assert_eq!(inst.preference_probability(&x, 1, 1), 0.5);
        assert_eq!(p + inst.preference_probability(&x, 1, 0), 1.0);
    }

    #[test]
    fn preference_frequency() {
        let inst = two_arm([0.25, 0.0], NoiseModel::Bernoulli);
        let mut rng = rng_from_seed(5);
        let x = Context::indexed(0);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| inst.sample_preference(&x, 0, 1, &mut rng)).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - sigmoid(0.25)).abs() <= 0.0025);
    }

    #[test]
    fn sigmoid_is_exactly_antisymmetric() {
        for i in -400..=400 {
            let u = i as f64 * 0.0937;
            assert_eq!(sigmoid(u) + sigmoid(-u), 1.0, "u = {u}");
        }
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!((log_sigmoid(0.3) - sigmoid(0.3).ln()).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_rejected_for_out_of_range_rewards() {
        let res = BanditInstance::new(
            ContextSpace::finite_uniform(1).unwrap(),
            ActionSpace::new(2).unwrap(),
            RewardModel::tabular(vec![vec![1.5, 0.0]], 2.0).unwrap(),
            NoiseModel::Bernoulli,
            ReferencePolicy::uniform(2),
        );
        assert!(res.is_err());
    }

    #[test]
    fn table_reference_requires_finite_contexts() {
        let res = BanditInstance::new(
            ContextSpace::sphere(2).unwrap(),
            ActionSpace::new(2).unwrap(),
            RewardModel::linear(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap(),
            NoiseModel::Gaussian { sigma: 0.1 },
            ReferencePolicy::table(vec![vec![0.5, 0.5]]).unwrap(),
        );
        assert!(res.is_err());
    }
}
