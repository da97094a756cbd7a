use rand::Rng;

use crate::bandit::context::Context;
use crate::bandit::instance::BanditInstance;
use crate::bandit::policy::{sample_categorical, Policy};

#[derive(Clone, Debug, PartialEq)]
pub struct RewardSample {
    pub context: Context,
    pub action: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceSample {
    pub context: Context,
    pub first: usize,
    pub second: usize,
    /// The label `y`: `true` when `first` was preferred.
    pub first_preferred: bool,
}

impl PreferenceSample {
    pub fn label(&self) -> f64 {
        if self.first_preferred {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleBatch {
    Reward(Vec<RewardSample>),
    Preference(Vec<PreferenceSample>),
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        match self {
            SampleBatch::Reward(v) => v.len(),
            SampleBatch::Preference(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_rewards(&self) -> Option<&[RewardSample]> {
        match self {
            SampleBatch::Reward(v) => Some(v),
            SampleBatch::Preference(_) => None,
        }
    }

    pub fn as_preferences(&self) -> Option<&[PreferenceSample]> {
        match self {
            SampleBatch::Preference(v) => Some(v),
            SampleBatch::Reward(_) => None,
        }
    }

    /// Every action index is below `actions`.
    pub fn is_valid(&self, actions: usize) -> bool {
        match self {
            SampleBatch::Reward(v) => v.iter().all(|s| s.action < actions),
            SampleBatch::Preference(v) => v.iter().all(|s| s.first < actions && s.second < actions),
        }
    }
}

/// Draw `count` rounds of `x ~ d0, a ~ policy(.|x), r ~ reward feedback`.
pub fn collect_rewards<P, R>(
    instance: &BanditInstance,
    policy: &P,
    count: usize,
    rng: &mut R,
) -> Vec<RewardSample>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    (0..count)
        .map(|_| {
            let context = instance.sample_context(rng);
            let action = sample_categorical(&policy.probs(&context), rng);
            let reward = instance.sample_reward(&context, action, rng);
            RewardSample {
                context,
                action,
                reward,
            }
        })
        .collect()
}

/// Draw `count` rounds of `x ~ d0`, two independent actions from the policy,
/// and a preference label from the oracle. The two actions may coincide.
pub fn collect_preferences<P, R>(
    instance: &BanditInstance,
    policy: &P,
    count: usize,
    rng: &mut R,
) -> Vec<PreferenceSample>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    (0..count)
        .map(|_| {
            let context = instance.sample_context(rng);
            let probs = policy.probs(&context);
            let first = sample_categorical(&probs, rng);
            let second = sample_categorical(&probs, rng);
            let first_preferred = instance.sample_preference(&context, first, second, rng);
            PreferenceSample {
                context,
                first,
                second,
                first_preferred,
            }
        })
        .collect()
}
