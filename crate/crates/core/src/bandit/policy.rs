use rand::Rng;

use crate::bandit::context::Context;
use crate::bandit::reward::RewardModel;
use crate::error::{Error, Result};

/// A conditional action distribution `pi(.|x)` over a finite action set.
pub trait Policy {
    fn num_actions(&self) -> usize;

    /// Natural-log probabilities; `-inf` marks actions outside the support.
    fn log_probs(&self, ctx: &Context) -> Vec<f64>;

    fn probs(&self, ctx: &Context) -> Vec<f64> {
        self.log_probs(ctx).into_iter().map(f64::exp).collect()
    }

    fn sample<R: Rng + ?Sized>(&self, ctx: &Context, rng: &mut R) -> usize
    where
        Self: Sized,
    {
        sample_categorical(&self.probs(ctx), rng)
    }
}

/// Inverse-CDF draw from a probability vector using one uniform variate.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = a;
            if u < acc {
                return a;
            }
        }
    }
    last
}

/// The known reference policy `pi0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePolicy {
    actions: usize,
    table: Option<Vec<Vec<f64>>>,
}

impl ReferencePolicy {
    pub fn uniform(actions: usize) -> Self {
        assert!(actions > 0, "reference policy needs at least one action");
        ReferencePolicy {
            actions,
            table: None,
        }
    }

    /// Row-stochastic table indexed by finite context.
    pub fn table(rows: Vec<Vec<f64>>) -> Result<Self> {
        let actions = rows.first().map_or(0, Vec::len);
        if actions == 0 {
            return Err(Error::InvalidInstance("empty reference table".into()));
        }
        for row in &rows {
            if row.len() != actions {
                return Err(Error::InvalidInstance("ragged reference table".into()));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidInstance(
                    "reference probabilities must be nonnegative".into(),
                ));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInstance(format!(
                    "reference row sums to {s}, expected 1"
                )));
            }
        }
        Ok(ReferencePolicy {
            actions,
            table: Some(rows),
        })
    }

    pub fn is_uniform(&self) -> bool {
        self.table.is_none()
    }

    pub fn rows(&self) -> Option<&[Vec<f64>]> {
        self.table.as_deref()
    }

    pub fn prob(&self, ctx: &Context, action: usize) -> f64 {
        match &self.table {
            None => 1.0 / self.actions as f64,
            Some(rows) => rows[ctx.index.expect("tabular reference needs an indexed context")]
                [action],
        }
    }
}

impl Policy for ReferencePolicy {
    fn num_actions(&self) -> usize {
        self.actions
    }

    fn log_probs(&self, ctx: &Context) -> Vec<f64> {
        self.probs(ctx).into_iter().map(f64::ln).collect()
    }

    fn probs(&self, ctx: &Context) -> Vec<f64> {
        match &self.table {
            None => vec![1.0 / self.actions as f64; self.actions],
            Some(rows) => rows[ctx.index.expect("tabular reference needs an indexed context")]
                .clone(),
        }
    }
}

/// An explicit probability table over finite contexts.
#[derive(Clone, Debug, PartialEq)]
pub struct TablePolicy {
    rows: Vec<Vec<f64>>,
}

impl TablePolicy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        // same validation as a reference table
        ReferencePolicy::table(rows.clone())?;
        Ok(TablePolicy { rows })
    }
}

impl Policy for TablePolicy {
    fn num_actions(&self) -> usize {
        self.rows[0].len()
    }

    fn log_probs(&self, ctx: &Context) -> Vec<f64> {
        self.probs(ctx).into_iter().map(f64::ln).collect()
    }

    fn probs(&self, ctx: &Context) -> Vec<f64> {
        self.rows[ctx.index.expect("table policy needs an indexed context")].clone()
    }
}

/// Output of one Gibbs normalization.
#[derive(Clone, Debug)]
pub struct GibbsRow {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
    /// `log Z(x) = log sum_a pi0(a|x) exp(eta R(x, a))`.
    pub log_normalizer: f64,
}

/// `pi(a) ∝ pi0(a) exp(eta r_a)`, normalized after subtracting the largest
/// exponent over the support of `pi0`.
pub fn gibbs_row(ref_probs: &[f64], rewards: &[f64], eta: f64) -> GibbsRow {
    let exponents: Vec<f64> = ref_probs
        .iter()
        .zip(rewards)
        .map(|(&p, &r)| if p > 0.0 { p.ln() + eta * r } else { f64::NEG_INFINITY })
        .collect();
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let log_total = total.ln();
    GibbsRow {
        probs: weights.iter().map(|w| w / total).collect(),
        log_probs: exponents.iter().map(|e| e - max - log_total).collect(),
        log_normalizer: max + log_total,
    }
}

/// The KL-regularized optimal response `pi0 * exp(eta R) / Z` to a reward model.
#[derive(Clone, Debug)]
pub struct SoftmaxPolicy {
    reference: ReferencePolicy,
    eta: f64,
    reward: RewardModel,
}

impl SoftmaxPolicy {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn reward(&self) -> &RewardModel {
        &self.reward
    }

    pub fn reference(&self) -> &ReferencePolicy {
        &self.reference
    }

    pub fn gibbs(&self, ctx: &Context) -> GibbsRow {
        gibbs_row(
            &self.reference.probs(ctx),
            &self.reward.values(ctx),
            self.eta,
        )
    }

    pub fn log_normalizer(&self, ctx: &Context) -> f64 {
        self.gibbs(ctx).log_normalizer
    }
}

impl Policy for SoftmaxPolicy {
    fn num_actions(&self) -> usize {
        self.reward.num_actions()
    }

    fn log_probs(&self, ctx: &Context) -> Vec<f64> {
        self.gibbs(ctx).log_probs
    }

    fn probs(&self, ctx: &Context) -> Vec<f64> {
        self.gibbs(ctx).probs
    }
}

/// Policy improvement oracle: the maximizer of
/// `E_{a~pi}[R(x,a)] - KL(pi || pi0) / eta` for every context.
pub fn planning_oracle(
    reward: &RewardModel,
    reference: &ReferencePolicy,
    eta: f64,
) -> Result<SoftmaxPolicy> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if reward.num_actions() != reference.num_actions() {
        return Err(Error::InvalidArgument(
            "reward model and reference policy disagree on the action count".into(),
        ));
    }
    Ok(SoftmaxPolicy {
        reference: reference.clone(),
        eta,
        reward: reward.clone(),
    })
}
