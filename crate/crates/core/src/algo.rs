//! Two-stage mixed-policy sampling (reward and preference feedback), the
//! one-stage offline baseline, and sample sizes prescribed by the theory.

use rand::Rng;

use crate::bandit::{
    collect_preferences, collect_rewards, planning_oracle, BanditInstance, ModelClass, Policy,
    PreferenceSample, RewardSample, SampleBatch, SoftmaxPolicy,
};
use crate::error::{Error, Result};
use crate::estimate::{bt_mle_fit, least_squares_fit, FitConfig, FitReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Reward,
    Preference,
}

impl Feedback {
    pub fn as_str(&self) -> &'static str {
        match self {
            Feedback::Reward => "reward",
            Feedback::Preference => "preference",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgoConfig {
    pub eta: f64,
    /// Stage-1 rounds, sampled from the reference policy.
    pub m: usize,
    /// Stage-2 rounds, sampled from the intermediate policy.
    pub n: usize,
    pub feedback: Feedback,
    /// Estimator settings. An infinite `param_bound` is replaced by the
    /// instance bound `B` for reward fits and `2B` for preference fits
    /// (centered rewards of a `[-B, B]` model lie in `[-2B, 2B]`).
    pub fit: FitConfig,
}

impl AlgoConfig {
    pub fn new(eta: f64, m: usize, n: usize, feedback: Feedback) -> Self {
        AlgoConfig {
            eta,
            m,
            n,
            feedback,
            fit: FitConfig::default(),
        }
    }

    pub fn total(&self) -> usize {
        self.m + self.n
    }
}

/// Everything a run produced besides its output policy.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub stage1: SampleBatch,
    pub stage2: SampleBatch,
    /// `theta_hat_0`, fitted on stage 1 alone.
    pub first_fit: FitReport,
    /// `theta_hat`, fitted on both stages pooled.
    pub final_fit: FitReport,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub policy: SoftmaxPolicy,
    /// `pi_{theta_hat_0}`, the stage-2 sampling policy.
    pub intermediate: SoftmaxPolicy,
    pub trace: RunTrace,
}

/// Two-stage mixed-policy sampling with reward feedback.
pub fn tmps_run<R: Rng + ?Sized>(
    instance: &BanditInstance,
    cfg: &AlgoConfig,
    rng: &mut R,
) -> Result<RunOutput> {
    if cfg.feedback != Feedback::Reward {
        return Err(Error::InvalidArgument("tmps expects reward feedback".into()));
    }
    two_stage(instance, cfg, rng)
}

/// Two-stage mixed-policy sampling with preference feedback.
pub fn tmps_pf_run<R: Rng + ?Sized>(
    instance: &BanditInstance,
    cfg: &AlgoConfig,
    rng: &mut R,
) -> Result<RunOutput> {
    if cfg.feedback != Feedback::Preference {
        return Err(Error::InvalidArgument("tmps_pf expects preference feedback".into()));
    }
    two_stage(instance, cfg, rng)
}

/// One stage of `m + n` rounds from the reference policy, one fit, one plan.
pub fn offline_run<R: Rng + ?Sized>(
    instance: &BanditInstance,
    cfg: &AlgoConfig,
    rng: &mut R,
) -> Result<RunOutput> {
    check(instance, cfg, cfg.total())?;
    let fit_cfg = effective_fit(instance, cfg);
    let class = instance.model_class();
    let batch = collect(instance, instance.reference(), cfg.feedback, cfg.total(), rng);
    let fit = fit_batch(&batch, class, &fit_cfg)?;
    let policy = planning_oracle(&fit.model, instance.reference(), cfg.eta)?;
    Ok(RunOutput {
        intermediate: policy.clone(),
        policy,
        trace: RunTrace {
            stage2: empty_like(&batch),
            stage1: batch,
            first_fit: fit.clone(),
            final_fit: fit,
        },
    })
}

fn two_stage<R: Rng + ?Sized>(
    instance: &BanditInstance,
    cfg: &AlgoConfig,
    rng: &mut R,
) -> Result<RunOutput> {
    check(instance, cfg, cfg.m)?;
    let fit_cfg = effective_fit(instance, cfg);
    let class = instance.model_class();

    let stage1 = collect(instance, instance.reference(), cfg.feedback, cfg.m, rng);
    let first_fit = fit_batch(&stage1, class, &fit_cfg)?;
    let intermediate = planning_oracle(&first_fit.model, instance.reference(), cfg.eta)?;

    let stage2 = collect(instance, &intermediate, cfg.feedback, cfg.n, rng);
    let final_fit = if stage2.is_empty() {
        first_fit.clone()
    } else {
        fit_batch(&pool(&stage1, &stage2), class, &fit_cfg)?
    };
    let policy = planning_oracle(&final_fit.model, instance.reference(), cfg.eta)?;
    Ok(RunOutput {
        policy,
        intermediate,
        trace: RunTrace {
            stage1,
            stage2,
            first_fit,
            final_fit,
        },
    })
}

fn check(instance: &BanditInstance, cfg: &AlgoConfig, first_stage: usize) -> Result<()> {
    if first_stage == 0 {
        return Err(Error::InvalidArgument(
            "the first stage needs at least one sample".into(),
        ));
    }
    if !(cfg.eta > 0.0 && cfg.eta.is_finite()) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    if cfg.feedback == Feedback::Preference && instance.num_actions() < 2 {
        return Err(Error::InvalidArgument(
            "preference feedback needs at least two actions".into(),
        ));
    }
    Ok(())
}

fn effective_fit(instance: &BanditInstance, cfg: &AlgoConfig) -> FitConfig {
    let mut fit = cfg.fit;
    if !fit.param_bound.is_finite() {
        let b = instance.truth().bound();
        fit.param_bound = match cfg.feedback {
            Feedback::Reward => b,
            Feedback::Preference => 2.0 * b,
        };
    }
    fit
}

fn collect<P: Policy + ?Sized, R: Rng + ?Sized>(
    instance: &BanditInstance,
    policy: &P,
    feedback: Feedback,
    count: usize,
    rng: &mut R,
) -> SampleBatch {
    match feedback {
        Feedback::Reward => SampleBatch::Reward(collect_rewards(instance, policy, count, rng)),
        Feedback::Preference => {
            SampleBatch::Preference(collect_preferences(instance, policy, count, rng))
        }
    }
}

pub(crate) fn fit_batch(
    batch: &SampleBatch,
    class: ModelClass,
    cfg: &FitConfig,
) -> Result<FitReport> {
    match batch {
        SampleBatch::Reward(s) => least_squares_fit(s, class, cfg),
        SampleBatch::Preference(s) => bt_mle_fit(s, class, cfg),
    }
}

/// Stage-1 data followed by stage-2 data.
pub fn pool(first: &SampleBatch, second: &SampleBatch) -> SampleBatch {
    match (first, second) {
        (SampleBatch::Reward(a), SampleBatch::Reward(b)) => {
            SampleBatch::Reward(a.iter().chain(b).cloned().collect::<Vec<RewardSample>>())
        }
        (SampleBatch::Preference(a), SampleBatch::Preference(b)) => SampleBatch::Preference(
            a.iter().chain(b).cloned().collect::<Vec<PreferenceSample>>(),
        ),
        _ => panic!("pooling batches of different feedback types"),
    }
}

fn empty_like(batch: &SampleBatch) -> SampleBatch {
    match batch {
        SampleBatch::Reward(_) => SampleBatch::Reward(Vec::new()),
        SampleBatch::Preference(_) => SampleBatch::Preference(Vec::new()),
    }
}

/// The learners a sweep can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Tmps,
    TmpsPf,
    /// Offline baseline with reward feedback.
    Offline,
    /// Offline baseline with preference feedback.
    OfflinePf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Tmps,
        Algorithm::TmpsPf,
        Algorithm::Offline,
        Algorithm::OfflinePf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Tmps => "tmps",
            Algorithm::TmpsPf => "tmps_pf",
            Algorithm::Offline => "offline",
            Algorithm::OfflinePf => "offline_pf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    pub fn feedback(&self) -> Feedback {
        match self {
            Algorithm::Tmps | Algorithm::Offline => Feedback::Reward,
            Algorithm::TmpsPf | Algorithm::OfflinePf => Feedback::Preference,
        }
    }

    pub fn is_offline(&self) -> bool {
        matches!(self, Algorithm::Offline | Algorithm::OfflinePf)
    }

    /// Runs with `cfg.feedback` overridden by the algorithm's own feedback.
    pub fn run<R: Rng + ?Sized>(
        &self,
        instance: &BanditInstance,
        cfg: &AlgoConfig,
        rng: &mut R,
    ) -> Result<RunOutput> {
        let cfg = AlgoConfig {
            feedback: self.feedback(),
            ..*cfg
        };
        match self {
            Algorithm::Tmps => tmps_run(instance, &cfg, rng),
            Algorithm::TmpsPf => tmps_pf_run(instance, &cfg, rng),
            Algorithm::Offline | Algorithm::OfflinePf => offline_run(instance, &cfg, rng),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs of the sample-size prescription.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryBudget {
    /// Target suboptimality `epsilon`.
    pub epsilon: f64,
    /// Failure probability, in `(0, 1/5)`.
    pub delta: f64,
    /// Covering number `N_R(epsilon_c)` of the reward class.
    pub cover_count: f64,
    /// Covering radius `epsilon_c`.
    pub cover_radius: f64,
    /// Data-coverage coefficient `D^2`.
    pub coverage: f64,
}

impl TheoryBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.epsilon, self.cover_count, self.cover_radius, self.coverage]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive {
            return Err(Error::InvalidArgument("budget entries must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.2) {
            return Err(Error::InvalidArgument("delta must lie in (0, 1/5)".into()));
        }
        Ok(())
    }
}

/// Leading constants of the two stage sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizeConstants {
    pub stage1: f64,
    pub stage2: f64,
}

impl SizeConstants {
    pub fn for_feedback(feedback: Feedback) -> Self {
        match feedback {
            Feedback::Reward => SizeConstants {
                stage1: 128.0,
                stage2: 43.0,
            },
            Feedback::Preference => SizeConstants {
                stage1: 32.0,
                stage2: 1.0,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSizes {
    pub m: u64,
    pub n: u64,
    /// Real-valued sizes before rounding up.
    pub m_raw: f64,
    pub n_raw: f64,
}

/// Stage sizes with the default constants.
///
/// Reward feedback: `m = 128 eta^2 D^2 B^2 L`, `n = 43 (eta/eps) B^2 L`;
/// preference feedback: `m = 32 eta^2 D^2 e^B L`, `n = (eta/eps) e^B L`;
/// with `L = ln(2N/delta)`, each rounded up.
pub fn theorem_sample_sizes(
    budget: &TheoryBudget,
    eta: f64,
    bound: f64,
    feedback: Feedback,
) -> Result<SampleSizes> {
    theorem_sample_sizes_scaled(budget, eta, bound, feedback, 1.0)
}

/// [`theorem_sample_sizes`] with both constants multiplied by `multiplier`.
pub fn theorem_sample_sizes_scaled(
    budget: &TheoryBudget,
    eta: f64,
    bound: f64,
    feedback: Feedback,
    multiplier: f64,
) -> Result<SampleSizes> {
    budget.validate()?;
    if !(eta > 0.0 && bound > 0.0 && multiplier > 0.0) {
        return Err(Error::InvalidArgument(
            "eta, bound and multiplier must be positive".into(),
        ));
    }
    let c = SizeConstants::for_feedback(feedback);
    let log_term = (2.0 * budget.cover_count / budget.delta).ln();
    let scale = match feedback {
        Feedback::Reward => bound * bound,
        Feedback::Preference => bound.exp(),
    };
    let m_raw = multiplier * c.stage1 * (eta * eta) * budget.coverage * scale * log_term;
    let n_raw = multiplier * c.stage2 * (eta / budget.epsilon) * scale * log_term;
    Ok(SampleSizes {
        m: m_raw.ceil() as u64,
        n: n_raw.ceil() as u64,
        m_raw,
        n_raw,
    })
}

/// Covering radius the theory pairs with a stage ratio `n/m`:
/// `min{eps / (2(1 + m/n) S), 1 / (8(1 + n/m) S eta^2 D^2)}`, with `S = B`
/// for reward feedback and `S = e^B` for preference feedback.
pub fn prescribed_cover_radius(
    epsilon: f64,
    stage_ratio: f64,
    eta: f64,
    bound: f64,
    coverage: f64,
    feedback: Feedback,
) -> f64 {
    let s = match feedback {
        Feedback::Reward => bound,
        Feedback::Preference => bound.exp(),
    };
    let a = epsilon / (2.0 * (1.0 + 1.0 / stage_ratio) * s);
    let b = 1.0 / (8.0 * (1.0 + stage_ratio) * s * eta * eta * coverage);
    a.min(b)
}
