//! Random instance generators shared by the verification suite, tests and
//! examples.

use rand::Rng;

use crate::bandit::context::{sphere_point, ContextSpace};
use crate::bandit::instance::{ActionSpace, BanditInstance, NoiseModel};
use crate::bandit::policy::ReferencePolicy;
use crate::bandit::reward::RewardModel;
use crate::error::Result;

/// Probability vector with entries bounded away from zero.
pub fn random_simplex<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // put the rounding residue on the last entry so the row sums to 1 tightly
    let head: f64 = p[..len - 1].iter().sum();
    p[len - 1] = 1.0 - head;
    p
}

pub fn random_table<R: Rng + ?Sized>(
    contexts: usize,
    actions: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..contexts)
        .map(|_| (0..actions).map(|_| rng.random::<f64>()).collect())
        .collect()
}

/// Tabular instance with random context weights, random positive `pi0`, and
/// rewards uniform on `[0, 1]`.
pub fn random_tabular_instance<R: Rng + ?Sized>(
    contexts: usize,
    actions: usize,
    rng: &mut R,
) -> Result<BanditInstance> {
    let weights = random_simplex(contexts, rng);
    let reference = (0..contexts).map(|_| random_simplex(actions, rng)).collect();
    let truth = random_table(contexts, actions, rng);
    BanditInstance::new(
        ContextSpace::finite(weights, None)?,
        ActionSpace::new(actions)?,
        RewardModel::tabular(truth, 1.0)?,
        NoiseModel::Bernoulli,
        ReferencePolicy::table(reference)?,
    )
}

/// Tabular instance with dimensions drawn uniformly from `1..=max_contexts`
/// and `2..=max_actions`.
pub fn random_small_instance<R: Rng + ?Sized>(
    max_contexts: usize,
    max_actions: usize,
    rng: &mut R,
) -> Result<BanditInstance> {
    let m = rng.random_range(1..=max_contexts);
    let a = rng.random_range(2..=max_actions);
    random_tabular_instance(m, a, rng)
}

/// Linear instance over unit-sphere contexts with embedding rows drawn on the
/// sphere of the given radius, uniform `pi0`, and Gaussian noise.
pub fn sphere_linear_instance<R: Rng + ?Sized>(
    dim: usize,
    actions: usize,
    radius: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<BanditInstance> {
    let embedding = (0..actions).map(|_| sphere_point(dim, radius, rng)).collect();
    BanditInstance::new(
        ContextSpace::sphere(dim)?,
        ActionSpace::new(actions)?,
        RewardModel::linear(embedding, radius)?,
        NoiseModel::Gaussian { sigma },
        ReferencePolicy::uniform(actions),
    )
}
