//! Reward-model fitting from reward feedback (least squares) and from
//! preference feedback (Bradley-Terry maximum likelihood).

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::bandit::{
    log_sigmoid, sigmoid, Context, ModelClass, PreferenceSample, RewardModel, RewardSample,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    /// Coefficient of the `||theta||^2` penalty.
    pub ridge: f64,
    /// Stop once the gradient max-norm of the penalized log-likelihood is this small.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Fitted rewards are projected so that `|R| <= param_bound`.
    pub param_bound: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ridge: 1e-8,
            grad_tol: 1e-8,
            max_iters: 10_000,
            param_bound: f64::INFINITY,
        }
    }
}

impl FitConfig {
    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.param_bound = bound;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidArgument("ridge must be >= 0".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument("grad_tol must be > 0".into()));
        }
        if !(self.param_bound > 0.0) {
            return Err(Error::InvalidArgument("param_bound must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FitReport {
    /// The estimate after projection onto `|R| <= param_bound`.
    pub model: RewardModel,
    /// The unconstrained optimum (gauge-centered for preference fits).
    pub unclamped: RewardModel,
    pub iterations: usize,
    /// Gradient max-norm of the penalized objective at `unclamped`.
    pub grad_max_norm: f64,
    pub converged: bool,
    /// Some pair was only ever observed with one label and no ridge bounds the
    /// optimum; the estimate is finite only because of the iteration cap and
    /// the projection.
    pub separable: bool,
    pub clamped: bool,
}

/// Sum of squared residuals of `model` on the samples.
pub fn squared_loss(samples: &[RewardSample], model: &RewardModel) -> f64 {
    samples
        .iter()
        .map(|s| (model.value(&s.context, s.action) - s.reward).powi(2))
        .sum()
}

/// `argmin_theta sum_i (R(theta, x_i, a_i) - r_i)^2 + ridge ||theta||^2`.
///
/// Tabular cells get the ridge-shrunk sample mean (0 for unseen cells) and
/// are clamped to `[-B, B]`; linear models solve one normal system per action.
pub fn least_squares_fit(
    samples: &[RewardSample],
    class: ModelClass,
    cfg: &FitConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for s in samples {
        check_sample(class, &s.context, &[s.action])?;
    }
    let params = match class {
        ModelClass::Tabular { .. } => {
            let p = class.num_params();
            let mut sums = vec![0.0; p];
            let mut counts = vec![0.0; p];
            for s in samples {
                let i = class.feature(&s.context, s.action).offset;
                sums[i] += s.reward;
                counts[i] += 1.0;
            }
            sums.iter()
                .zip(&counts)
                .map(|(&s, &c)| if c > 0.0 { s / (c + cfg.ridge) } else { 0.0 })
                .collect::<Vec<_>>()
        }
        ModelClass::Linear { actions, dim } => {
            let mut grams = vec![DMatrix::<f64>::zeros(dim, dim); actions];
            let mut moments = vec![DVector::<f64>::zeros(dim); actions];
            for s in samples {
                let x = DVector::from_column_slice(&s.context.features);
                grams[s.action].ger(1.0, &x, &x, 1.0);
                moments[s.action].axpy(s.reward, &x, 1.0);
            }
            let mut params = Vec::with_capacity(actions * dim);
            for (a, (mut gram, moment)) in grams.into_iter().zip(moments).enumerate() {
                for k in 0..dim {
                    gram[(k, k)] += cfg.ridge;
                }
                let chol = gram.cholesky().ok_or(Error::SingularDesign { action: a })?;
                let phi = chol.solve(&moment);
                if phi.iter().any(|v| !v.is_finite()) {
                    return Err(Error::SingularDesign { action: a });
                }
                params.extend(phi.iter());
            }
            params
        }
    };
    let unclamped = RewardModel::from_params(class, params.clone(), cfg.param_bound)?;
    let (model, clamped) = match class {
        ModelClass::Tabular { .. } => project(class, params, cfg.param_bound),
        ModelClass::Linear { .. } => (params, false),
    };
    Ok(FitReport {
        model: unclamped.with_params(model, cfg.param_bound),
        grad_max_norm: ls_gradient(samples, &unclamped, cfg.ridge)
            .iter()
            .fold(0.0, |m, g| m.max(g.abs())),
        unclamped,
        iterations: 1,
        converged: true,
        separable: false,
        clamped,
    })
}

fn ls_gradient(samples: &[RewardSample], model: &RewardModel, ridge: f64) -> Vec<f64> {
    let class = model.class();
    let mut grad: Vec<f64> = model.params().iter().map(|p| 2.0 * ridge * p).collect();
    for s in samples {
        let resid = model.value(&s.context, s.action) - s.reward;
        let block = class.feature(&s.context, s.action);
        for (k, v) in block.values.iter().enumerate() {
            grad[block.offset + k] += 2.0 * resid * v;
        }
    }
    grad
}

/// Penalized Bradley-Terry log-likelihood
/// `sum_i [y_i log sigma(dR_i) + (1 - y_i) log sigma(-dR_i)] - ridge ||theta||^2`.
pub fn bt_log_likelihood(samples: &[PreferenceSample], model: &RewardModel, ridge: f64) -> f64 {
    let penalty: f64 = model.params().iter().map(|p| p * p).sum::<f64>() * ridge;
    samples
        .iter()
        .map(|s| {
            let diff = model.value(&s.context, s.first) - model.value(&s.context, s.second);
            if s.first_preferred {
                log_sigmoid(diff)
            } else {
                log_sigmoid(-diff)
            }
        })
        .sum::<f64>()
        - penalty
}

/// Gradient of [`bt_log_likelihood`] with respect to the flat parameters.
pub fn bt_gradient(samples: &[PreferenceSample], model: &RewardModel, ridge: f64) -> Vec<f64> {
    let class = model.class();
    let mut grad: Vec<f64> = model.params().iter().map(|p| -2.0 * ridge * p).collect();
    for s in samples {
        if s.first == s.second {
            continue;
        }
        let diff = model.value(&s.context, s.first) - model.value(&s.context, s.second);
        let w = s.label() - sigmoid(diff);
        let b1 = class.feature(&s.context, s.first);
        let b2 = class.feature(&s.context, s.second);
        for (k, v) in b1.values.iter().enumerate() {
            grad[b1.offset + k] += w * v;
        }
        for (k, v) in b2.values.iter().enumerate() {
            grad[b2.offset + k] -= w * v;
        }
    }
    grad
}

/// Objective, gradient and negated Hessian at `params`.
fn bt_evaluate(
    samples: &[PreferenceSample],
    class: ModelClass,
    params: &[f64],
    ridge: f64,
) -> (f64, Vec<f64>, DMatrix<f64>) {
    let p = params.len();
    let model = RewardModel::from_params(class, params.to_vec(), f64::INFINITY)
        .expect("parameters stay finite");
    let mut hess = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        hess[(i, i)] = 2.0 * ridge;
    }
    for s in samples {
        if s.first == s.second {
            continue;
        }
        let diff = model.value(&s.context, s.first) - model.value(&s.context, s.second);
        let q = sigmoid(diff);
        let w = q * (1.0 - q);
        if w == 0.0 {
            continue;
        }
        let blocks = [
            (class.feature(&s.context, s.first), 1.0),
            (class.feature(&s.context, s.second), -1.0),
        ];
        for (bi, si) in &blocks {
            for (bj, sj) in &blocks {
                let scale = w * si * sj;
                for (k, vk) in bi.values.iter().enumerate() {
                    for (l, vl) in bj.values.iter().enumerate() {
                        hess[(bi.offset + k, bj.offset + l)] += scale * vk * vl;
                    }
                }
            }
        }
    }
    (
        bt_log_likelihood(samples, &model, ridge),
        bt_gradient(samples, &model, ridge),
        hess,
    )
}

/// Maximum-likelihood fit of a Bradley-Terry reward model.
///
/// The likelihood only sees reward differences, so the iterate is kept in
/// the gauge-centered subspace (per-context mean zero for tabular models,
/// action-mean embedding zero for linear ones). Damped Newton steps with
/// Armijo backtracking run until the gradient max-norm drops to `grad_tol`.
pub fn bt_mle_fit(
    samples: &[PreferenceSample],
    class: ModelClass,
    cfg: &FitConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for s in samples {
        check_sample(class, &s.context, &[s.first, s.second])?;
    }
    let p = class.num_params();
    let mut theta = vec![0.0; p];
    let (mut ll, mut grad, mut hess) = bt_evaluate(samples, class, &theta, cfg.ridge);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        if max_abs(&grad) <= cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut direction = grad.clone();
        class.center(&mut direction);

        let scale = 1.0 + (0..p).map(|i| hess[(i, i)]).fold(0.0, f64::max);
        let mut damping = 1e-12 * scale;
        let mut step = None;
        for _ in 0..12 {
            let mut system = hess.clone();
            for i in 0..p {
                system[(i, i)] += damping;
            }
            if let Some(chol) = system.cholesky() {
                let mut s: Vec<f64> = chol.solve(&DVector::from_vec(direction.clone())).data.into();
                class.center(&mut s);
                if s.iter().all(|v| v.is_finite()) {
                    step = Some(s);
                    break;
                }
            }
            damping *= 100.0;
        }
        let step = step.unwrap_or_else(|| direction.clone());
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        if !(slope > 0.0) {
            break;
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let (trial_ll, trial_grad, trial_hess) = bt_evaluate(samples, class, &trial, cfg.ridge);
            // Near the optimum the objective is flat to rounding; a full Newton
            // step that halves the gradient is taken even if Armijo cannot see it.
            let armijo = trial_ll >= ll + 1e-4 * t * slope;
            let newton_flat = t == 1.0 && max_abs(&trial_grad) < 0.5 * max_abs(&grad);
            if armijo || newton_flat {
                theta = trial;
                ll = trial_ll;
                grad = trial_grad;
                hess = trial_hess;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no representable ascent left
            break;
        }
    }
    if !converged && max_abs(&grad) <= cfg.grad_tol {
        converged = true;
    }

    let separable = cfg.ridge == 0.0
        && (!converged
            || (matches!(class, ModelClass::Tabular { .. }) && has_one_sided_pair(samples)));
    let grad_max_norm = max_abs(&grad);
    let unclamped = RewardModel::from_params(class, theta.clone(), cfg.param_bound)?;
    let (projected, clamped) = project(class, theta, cfg.param_bound);
    Ok(FitReport {
        model: unclamped.with_params(projected, cfg.param_bound),
        unclamped,
        iterations,
        grad_max_norm,
        converged,
        separable,
        clamped,
    })
}

fn has_one_sided_pair(samples: &[PreferenceSample]) -> bool {
    // (context, low action, high action) -> (wins of low, total)
    let mut tally: HashMap<(usize, usize, usize), (usize, usize)> = HashMap::new();
    for s in samples {
        if s.first == s.second {
            continue;
        }
        let x = s.context.index.unwrap_or(0);
        let (lo, hi) = (s.first.min(s.second), s.first.max(s.second));
        let lo_wins = (s.first == lo) == s.first_preferred;
        let e = tally.entry((x, lo, hi)).or_default();
        e.0 += usize::from(lo_wins);
        e.1 += 1;
    }
    tally.values().any(|&(w, n)| w == 0 || w == n)
}

/// Clamp tabular entries to `[-bound, bound]`; shrink linear embedding rows to
/// norm `bound`, which bounds `|R|` on unit-norm contexts.
fn project(class: ModelClass, mut params: Vec<f64>, bound: f64) -> (Vec<f64>, bool) {
    if !bound.is_finite() {
        return (params, false);
    }
    let mut clamped = false;
    match class {
        ModelClass::Tabular { .. } => {
            for v in params.iter_mut() {
                if v.abs() > bound {
                    *v = v.signum() * bound;
                    clamped = true;
                }
            }
        }
        ModelClass::Linear { dim, .. } => {
            for row in params.chunks_mut(dim) {
                let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > bound {
                    row.iter_mut().for_each(|v| *v *= bound / n);
                    clamped = true;
                }
            }
        }
    }
    (params, clamped)
}

fn check_sample(class: ModelClass, ctx: &Context, actions: &[usize]) -> Result<()> {
    class.check_context(ctx)?;
    if actions.iter().any(|&a| a >= class.actions()) {
        return Err(Error::InvalidArgument("action index out of range".into()));
    }
    Ok(())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{planning_oracle, Policy, ReferencePolicy};

    fn reward(x: usize, a: usize, r: f64) -> RewardSample {
        RewardSample {
            context: Context::indexed(x),
            action: a,
            reward: r,
        }
    }

    fn pref(x: usize, a1: usize, a2: usize, y: bool) -> PreferenceSample {
        PreferenceSample {
            context: Context::indexed(x),
            first: a1,
            second: a2,
            first_preferred: y,
        }
    }

    #[test]
    fn tabular_cell_mean() {
        let class = ModelClass::Tabular { contexts: 1, actions: 2 };
        let fit = least_squares_fit(
            &[reward(0, 0, 1.0), reward(0, 0, 3.0)],
            class,
            &FitConfig::default().with_ridge(0.0),
        )
        .unwrap();
        assert_eq!(fit.model.params(), &[2.0, 0.0]);
    }

    #[test]
    fn tabular_clamp_keeps_unclamped_copy() {
        let class = ModelClass::Tabular { contexts: 1, actions: 2 };
        let cfg = FitConfig::default().with_ridge(0.0).with_bound(1.0);
        let fit = least_squares_fit(&[reward(0, 1, 3.0)], class, &cfg).unwrap();
        assert!(fit.clamped);
        assert_eq!(fit.model.params(), &[0.0, 1.0]);
        assert_eq!(fit.unclamped.params(), &[0.0, 3.0]);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let class = ModelClass::Tabular { contexts: 1, actions: 2 };
        assert!(matches!(
            least_squares_fit(&[], class, &FitConfig::default()),
            Err(Error::EmptyBatch)
        ));
        assert!(matches!(
            bt_mle_fit(&[], class, &FitConfig::default()),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn singular_linear_design_without_ridge() {
        let class = ModelClass::Linear { actions: 2, dim: 2 };
        let s = RewardSample {
            context: Context::point(vec![1.0, 0.0]),
            action: 0,
            reward: 1.0,
        };
        let res = least_squares_fit(&[s.clone(), s], class, &FitConfig::default().with_ridge(0.0));
        assert!(matches!(res, Err(Error::SingularDesign { .. })));
    }

    #[test]
    fn logit_of_empirical_frequency() {
        let class = ModelClass::Tabular { contexts: 1, actions: 2 };
        let batch: Vec<_> = (0..100).map(|i| pref(0, 0, 1, i < 75)).collect();
        let fit = bt_mle_fit(&batch, class, &FitConfig::default().with_ridge(0.0)).unwrap();
        let p = fit.model.params();
        assert!(fit.converged);
        assert!((p[0] - p[1] - 3f64.ln()).abs() < 1e-9, "diff {}", p[0] - p[1]);
        assert!(fit.grad_max_norm <= 1e-8);
        assert!(!fit.separable);
    }

    #[test]
    fn balanced_labels_give_zero_differences() {
        let class = ModelClass::Tabular { contexts: 2, actions: 3 };
        let mut batch = Vec::new();
        for x in 0..2 {
            for (a1, a2) in [(0, 1), (1, 2), (0, 2)] {
                batch.push(pref(x, a1, a2, true));
                batch.push(pref(x, a1, a2, false));
            }
        }
        let fit = bt_mle_fit(&batch, class, &FitConfig::default().with_ridge(0.0)).unwrap();
        assert!(fit.model.params().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn one_sided_pair_is_flagged() {
        let class = ModelClass::Tabular { contexts: 1, actions: 2 };
        let batch: Vec<_> = (0..20).map(|_| pref(0, 0, 1, true)).collect();
        let cfg = FitConfig {
            max_iters: 200,
            param_bound: 2.0,
            ..FitConfig::default().with_ridge(0.0)
        };
        let fit = bt_mle_fit(&batch, class, &cfg).unwrap();
        assert!(fit.separable);
        assert!(fit.clamped);
        assert!(fit.model.sup_norm() <= 2.0);
        // a ridge makes the optimum finite and unflagged
        let fit = bt_mle_fit(&batch, class, &FitConfig::default().with_ridge(1e-2)).unwrap();
        assert!(fit.converged && !fit.separable);
    }

    #[test]
    fn identical_actions_carry_no_information() {
        let class = ModelClass::Tabular { contexts: 1, actions: 2 };
        let batch = vec![pref(0, 1, 1, true), pref(0, 0, 0, false)];
        let fit = bt_mle_fit(&batch, class, &FitConfig::default()).unwrap();
        assert_eq!(fit.model.params(), &[0.0, 0.0]);
        let ll = bt_log_likelihood(&batch, &fit.model, 0.0);
        assert!((ll + 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn linear_fit_is_gauge_centered() {
        let class = ModelClass::Linear { actions: 3, dim: 2 };
        let xs = [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8], [0.8, -0.6]];
        let mut batch = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            for (a1, a2) in [(0, 1), (1, 2), (2, 0)] {
                for j in 0..4 {
                    batch.push(PreferenceSample {
                        context: Context::point(x.to_vec()),
                        first: a1,
                        second: a2,
                        first_preferred: (i + j + a1) % 3 != 0,
                    });
                }
            }
        }
        let fit = bt_mle_fit(&batch, class, &FitConfig::default()).unwrap();
        assert!(fit.converged);
        let p = fit.model.params();
        for k in 0..2 {
            let s: f64 = (0..3).map(|a| p[a * 2 + k]).sum();
            assert!(s.abs() < 1e-12);
        }
        // the policy is blind to where the gauge was anchored
        let pi0 = ReferencePolicy::uniform(3);
        let a = planning_oracle(&fit.model, &pi0, 2.0).unwrap();
        let b = planning_oracle(&fit.model.gauge_shift(&[0.3, -2.0]), &pi0, 2.0).unwrap();
        let x = Context::point(vec![0.6, -0.8]);
        for (u, v) in a.probs(&x).iter().zip(b.probs(&x)) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
