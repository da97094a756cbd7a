use crate::bandit::context::{norm, Context};
use crate::error::{Error, Result};

/// Parameter layout of a reward family.
///
/// Parameters are stored flat. Tabular models index `x * actions + a`; linear
/// models index `a * dim + k`, i.e. one embedding row per action, so that the
/// block feature of `(x, a)` is the context vector copied into slot `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelClass {
    Tabular { contexts: usize, actions: usize },
    Linear { actions: usize, dim: usize },
}

/// Nonzero block of the feature vector of a context-action pair.
#[derive(Clone, Copy, Debug)]
pub struct FeatureBlock<'a> {
    pub offset: usize,
    pub values: &'a [f64],
}

const ONE: [f64; 1] = [1.0];

impl ModelClass {
    pub fn actions(&self) -> usize {
        match *self {
            ModelClass::Tabular { actions, .. } | ModelClass::Linear { actions, .. } => actions,
        }
    }

    pub fn num_params(&self) -> usize {
        match *self {
            ModelClass::Tabular { contexts, actions } => contexts * actions,
            ModelClass::Linear { actions, dim } => actions * dim,
        }
    }

    /// Feature block of `(ctx, a)`.
    ///
    /// Panics if the context does not carry what the class needs (an index
    /// for tabular, a feature vector for linear).
    pub fn feature<'a>(&self, ctx: &'a Context, action: usize) -> FeatureBlock<'a> {
        match *self {
            ModelClass::Tabular { actions, .. } => {
                let x = ctx.index.expect("tabular reward needs an indexed context");
                FeatureBlock {
                    offset: x * actions + action,
                    values: &ONE,
                }
            }
            ModelClass::Linear { dim, .. } => {
                debug_assert_eq!(ctx.features.len(), dim);
                FeatureBlock {
                    offset: action * dim,
                    values: &ctx.features,
                }
            }
        }
    }

    /// Dense copy of the feature vector of `(ctx, a)`.
    pub fn dense_feature(&self, ctx: &Context, action: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_params()];
        let block = self.feature(ctx, action);
        out[block.offset..block.offset + block.values.len()].copy_from_slice(block.values);
        out
    }

    /// Remove the component of `params` along the reward gauge, i.e. the
    /// directions that add a per-context constant to every action's reward.
    pub fn center(&self, params: &mut [f64]) {
        match *self {
            ModelClass::Tabular { contexts, actions } => {
                for x in 0..contexts {
                    let row = &mut params[x * actions..(x + 1) * actions];
                    let mean = row.iter().sum::<f64>() / actions as f64;
                    row.iter_mut().for_each(|v| *v -= mean);
                }
            }
            ModelClass::Linear { actions, dim } => {
                for k in 0..dim {
                    let mean = (0..actions).map(|a| params[a * dim + k]).sum::<f64>()
                        / actions as f64;
                    for a in 0..actions {
                        params[a * dim + k] -= mean;
                    }
                }
            }
        }
    }

    pub(crate) fn check_context(&self, ctx: &Context) -> Result<()> {
        match *self {
            ModelClass::Tabular { contexts, .. } => match ctx.index {
                Some(x) if x < contexts => Ok(()),
                _ => Err(Error::InvalidArgument("context index out of range".into())),
            },
            ModelClass::Linear { dim, .. } => {
                if ctx.features.len() == dim {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "context has {} features, model expects {dim}",
                        ctx.features.len()
                    )))
                }
            }
        }
    }
}

/// A reward function `R(theta, x, a)` together with its declared bound `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardModel {
    class: ModelClass,
    params: Vec<f64>,
    bound: f64,
}

impl RewardModel {
    pub fn from_params(class: ModelClass, params: Vec<f64>, bound: f64) -> Result<Self> {
        if params.len() != class.num_params() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                class.num_params(),
                params.len()
            )));
        }
        if class.actions() == 0 {
            return Err(Error::InvalidArgument("no actions".into()));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite reward parameter".into()));
        }
        if bound.is_nan() || bound <= 0.0 {
            return Err(Error::InvalidArgument("reward bound must be positive".into()));
        }
        Ok(RewardModel {
            class,
            params,
            bound,
        })
    }

    /// `table[x][a]`.
    pub fn tabular(table: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        let contexts = table.len();
        let actions = table.first().map_or(0, Vec::len);
        if table.iter().any(|row| row.len() != actions) {
            return Err(Error::InvalidArgument("ragged reward table".into()));
        }
        Self::from_params(
            ModelClass::Tabular { contexts, actions },
            table.into_iter().flatten().collect(),
            bound,
        )
    }

    /// `embedding[a]` is the vector `phi(a)`, so `R(x, a) = <x, phi(a)>`.
    pub fn linear(embedding: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        let actions = embedding.len();
        let dim = embedding.first().map_or(0, Vec::len);
        if dim == 0 || embedding.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidArgument("ragged or empty embedding".into()));
        }
        Self::from_params(
            ModelClass::Linear { actions, dim },
            embedding.into_iter().flatten().collect(),
            bound,
        )
    }

    pub fn zeros(class: ModelClass, bound: f64) -> Self {
        RewardModel {
            class,
            params: vec![0.0; class.num_params()],
            bound,
        }
    }

    pub fn class(&self) -> ModelClass {
        self.class
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn num_actions(&self) -> usize {
        self.class.actions()
    }

    pub fn value(&self, ctx: &Context, action: usize) -> f64 {
        let block = self.class.feature(ctx, action);
        block
            .values
            .iter()
            .zip(&self.params[block.offset..])
            .map(|(x, p)| x * p)
            .sum()
    }

    pub fn values(&self, ctx: &Context) -> Vec<f64> {
        (0..self.num_actions()).map(|a| self.value(ctx, a)).collect()
    }

    /// `gamma * self + (1 - gamma) * other`, parameter-wise.
    pub fn interpolate(&self, other: &RewardModel, gamma: f64) -> RewardModel {
        assert_eq!(self.class, other.class, "interpolating across model classes");
        RewardModel {
            class: self.class,
            params: self
                .params
                .iter()
                .zip(&other.params)
                .map(|(a, b)| gamma * a + (1.0 - gamma) * b)
                .collect(),
            bound: self.bound.max(other.bound),
        }
    }

    /// Add a per-context constant to every action's reward.
    ///
    /// For tabular models `shift[x]` is added to row `x`; for linear models
    /// the vector `shift` is added to every embedding row, which shifts the
    /// reward at `x` by `<x, shift>`.
    pub fn gauge_shift(&self, shift: &[f64]) -> RewardModel {
        let mut params = self.params.clone();
        match self.class {
            ModelClass::Tabular { contexts, actions } => {
                assert_eq!(shift.len(), contexts);
                for x in 0..contexts {
                    for a in 0..actions {
                        params[x * actions + a] += shift[x];
                    }
                }
            }
            ModelClass::Linear { actions, dim } => {
                assert_eq!(shift.len(), dim);
                for a in 0..actions {
                    for k in 0..dim {
                        params[a * dim + k] += shift[k];
                    }
                }
            }
        }
        RewardModel {
            class: self.class,
            params,
            bound: self.bound,
        }
    }

    /// Largest `|R|` the parameters can produce on unit-norm (or indexed) contexts.
    pub fn sup_norm(&self) -> f64 {
        match self.class {
            ModelClass::Tabular { .. } => self.params.iter().fold(0.0, |m, p| m.max(p.abs())),
            ModelClass::Linear { dim, .. } => self
                .params
                .chunks(dim)
                .map(norm)
                .fold(0.0, f64::max),
        }
    }

    pub(crate) fn with_params(&self, params: Vec<f64>, bound: f64) -> RewardModel {
        debug_assert_eq!(params.len(), self.class.num_params());
        RewardModel {
            class: self.class,
            params,
            bound,
        }
    }
}
