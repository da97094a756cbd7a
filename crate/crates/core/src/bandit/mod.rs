//! Instances, reward models, reference and Gibbs policies, and every sampler.

pub mod context;
pub mod instance;
pub mod policy;
pub mod random;
pub mod reward;
pub mod sample;

pub use context::{sphere_point, Context, ContextSpace, FiniteContexts};
pub use instance::{
    bt_probability, log_sigmoid, sigmoid, ActionSpace, BanditInstance, NoiseModel,
};
pub use policy::{
    gibbs_row, planning_oracle, sample_categorical, GibbsRow, Policy, ReferencePolicy,
    SoftmaxPolicy, TablePolicy,
};
pub use reward::{FeatureBlock, ModelClass, RewardModel};
pub use sample::{
    collect_preferences, collect_rewards, PreferenceSample, RewardSample, SampleBatch,
};
