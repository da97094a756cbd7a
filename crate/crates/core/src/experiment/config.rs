//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algo::{Algorithm, Feedback};
use crate::bandit::{
    random::{random_simplex, random_table, sphere_linear_instance},
    ActionSpace, BanditInstance, ContextSpace, NoiseModel, ReferencePolicy, RewardModel,
};
use crate::error::{Error, Result};
use crate::seed::{derive_rng, Purpose};

fn default_repeats() -> usize {
    10
}
fn default_n_eval() -> usize {
    100_000
}
fn default_radius() -> f64 {
    5.0
}
fn default_sigma() -> f64 {
    0.1
}
fn default_eta() -> f64 {
    1.0
}
fn default_pool() -> usize {
    10_000
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    /// Worker threads for the sweep; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Record wall-clock time per run. Off by default so CSV bytes only
    /// depend on the config.
    #[serde(default)]
    pub timing: bool,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub figures: Option<FigureSpec>,
    #[serde(default)]
    pub coverage: Option<CoverageSpec>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    Finite,
    Sphere,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Bernoulli,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Uniform,
    /// Random positive rows per context (finite contexts only).
    Random,
}

/// The bandit instance. Finite contexts use a tabular class with rewards
/// drawn uniformly from `[0, 1]` per repeat (or the fixed `table`); sphere
/// contexts use a linear class whose per-action embeddings are drawn on the
/// sphere of radius `radius`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub contexts: ContextKind,
    /// Number of contexts (finite).
    #[serde(default)]
    pub count: Option<usize>,
    /// Context dimension (sphere).
    #[serde(default)]
    pub dim: Option<usize>,
    pub actions: usize,
    /// Fixed reward table, one row per context (finite).
    #[serde(default)]
    pub table: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Defaults to Bernoulli for finite contexts and Gaussian for sphere contexts.
    #[serde(default)]
    pub noise: Option<NoiseKind>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub reference: ReferenceKind,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub etas: Vec<f64>,
    /// `[m, n]` pairs. Offline runs use `m + n` samples from the reference policy.
    pub grid: Vec<[usize; 2]>,
    pub algorithms: Vec<Algorithm>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FigureSpec {
    pub feedback: Feedback,
    /// Regularization for panel a.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Regularization values for panel b.
    pub eta_sweep: Vec<f64>,
    pub totals: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoverageSpec {
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Sampled contexts for sphere instances.
    #[serde(default = "default_pool")]
    pub pool: usize,
}

impl Default for CoverageSpec {
    fn default() -> Self {
        CoverageSpec {
            eta: default_eta(),
            pool: default_pool(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(toml_key(&e), e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if self.n_eval < 2 {
            return Err(Error::config("n_eval", "must be at least 2"));
        }
        self.instance.validate()?;
        if let Some(s) = &self.sweep {
            check_etas("sweep.etas", &s.etas)?;
            if s.grid.is_empty() {
                return Err(Error::config("sweep.grid", "must be nonempty"));
            }
            if s.algorithms.is_empty() {
                return Err(Error::config("sweep.algorithms", "must be nonempty"));
            }
            for (i, [m, n]) in s.grid.iter().enumerate() {
                if *m == 0 {
                    return Err(Error::config(format!("sweep.grid[{i}]"), "m must be positive"));
                }
                let _ = n;
            }
        }
        if let Some(f) = &self.figures {
            check_etas("figures.eta", &[f.eta])?;
            check_etas("figures.eta_sweep", &f.eta_sweep)?;
            if f.totals.is_empty() || f.totals.contains(&0) {
                return Err(Error::config("figures.totals", "must be nonempty and positive"));
            }
        }
        if let Some(c) = &self.coverage {
            check_etas("coverage.eta", &[c.eta])?;
            if c.pool == 0 {
                return Err(Error::config("coverage.pool", "must be positive"));
            }
        }
        Ok(())
    }
}

fn check_etas(key: &str, etas: &[f64]) -> Result<()> {
    if etas.is_empty() {
        return Err(Error::config(key, "must be nonempty"));
    }
    if etas.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::config(key, "values must be positive and finite"));
    }
    Ok(())
}

/// Best-effort name of the key a TOML error points at.
fn toml_key(e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "config".to_string()
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.actions == 0 {
            return Err(Error::config("instance.actions", "must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("instance.sigma", "must be nonnegative"));
        }
        match self.contexts {
            ContextKind::Finite => {
                let count = self
                    .count
                    .ok_or_else(|| Error::config("instance.count", "required for finite contexts"))?;
                if count == 0 {
                    return Err(Error::config("instance.count", "must be positive"));
                }
                if self.dim.is_some() {
                    return Err(Error::config("instance.dim", "only valid for sphere contexts"));
                }
                if let Some(t) = &self.table {
                    if t.len() != count || t.iter().any(|r| r.len() != self.actions) {
                        return Err(Error::config("instance.table", "must be count x actions"));
                    }
                    if t.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                        return Err(Error::config("instance.table", "entries must lie in [0, 1]"));
                    }
                }
            }
            ContextKind::Sphere => {
                match self.dim {
                    Some(d) if d > 0 => {}
                    _ => return Err(Error::config("instance.dim", "required and positive for sphere contexts")),
                }
                if self.count.is_some() || self.table.is_some() {
                    return Err(Error::config(
                        "instance.count",
                        "count and table are only valid for finite contexts",
                    ));
                }
                if self.reference != ReferenceKind::Uniform {
                    return Err(Error::config(
                        "instance.reference",
                        "sphere contexts support only the uniform reference policy",
                    ));
                }
                if self.noise == Some(NoiseKind::Bernoulli) {
                    return Err(Error::config(
                        "instance.noise",
                        "Bernoulli noise needs rewards in [0, 1]; use gaussian",
                    ));
                }
                if !(self.radius > 0.0 && self.radius.is_finite()) {
                    return Err(Error::config("instance.radius", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn noise_model(&self) -> NoiseModel {
        let kind = self.noise.unwrap_or(match self.contexts {
            ContextKind::Finite => NoiseKind::Bernoulli,
            ContextKind::Sphere => NoiseKind::Gaussian,
        });
        match kind {
            NoiseKind::Gaussian => NoiseModel::Gaussian { sigma: self.sigma },
            NoiseKind::Bernoulli => NoiseModel::Bernoulli,
        }
    }

    /// The instance for one repeat; its randomness comes from the truth stream.
    pub fn build(&self, master_seed: u64, repeat: u64) -> Result<BanditInstance> {
        let mut rng = derive_rng(master_seed, repeat, 0, Purpose::Truth);
        match self.contexts {
            ContextKind::Finite => {
                let count = self.count.unwrap_or(0);
                let table = match &self.table {
                    Some(t) => t.clone(),
                    None => random_table(count, self.actions, &mut rng),
                };
                let reference = match self.reference {
                    ReferenceKind::Uniform => ReferencePolicy::uniform(self.actions),
                    ReferenceKind::Random => ReferencePolicy::table(
                        (0..count)
                            .map(|_| random_simplex(self.actions, &mut rng))
                            .collect(),
                    )?,
                };
                BanditInstance::new(
                    ContextSpace::finite_uniform(count)?,
                    ActionSpace::new(self.actions)?,
                    RewardModel::tabular(table, 1.0)?,
                    self.noise_model(),
                    reference,
                )
            }
            ContextKind::Sphere => sphere_linear_instance(
                self.dim.unwrap_or(0),
                self.actions,
                self.radius,
                self.sigma,
                &mut rng,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 3
        repeats = 1
        [instance]
        contexts = "finite"
        count = 2
        actions = 2
        [sweep]
        etas = [1.0]
        grid = [[16, 16]]
        algorithms = ["tmps"]
    "#;

    #[test]
    fn parses_minimal() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.repeats, 1);
        assert_eq!(cfg.n_eval, 100_000);
        assert_eq!(cfg.sweep.unwrap().algorithms, vec![Algorithm::Tmps]);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("repeats = 1", "repeats = 1\nrepeets = 2");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "repeets"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_algorithm_rejected() {
        let text = MINIMAL.replace("\"tmps\"", "\"ucb\"");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn zero_repeats_rejected() {
        let text = MINIMAL.replace("repeats = 1", "repeats = 0");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "repeats"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sphere_requires_dim() {
        let text = MINIMAL
            .replace("contexts = \"finite\"", "contexts = \"sphere\"")
            .replace("count = 2\n", "");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "instance.dim"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truth_depends_on_repeat_only() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let a = cfg.instance.build(3, 0).unwrap();
        let b = cfg.instance.build(3, 0).unwrap();
        let c = cfg.instance.build(3, 1).unwrap();
        assert_eq!(a.truth().params(), b.truth().params());
        assert_ne!(a.truth().params(), c.truth().params());
    }
}
