//! Exact and Monte-Carlo evaluation of the KL-regularized objective, the
//! suboptimality gap, the gap decomposition identities, and coverage
//! coefficients.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::bandit::{
    gibbs_row, planning_oracle, BanditInstance, Context, ContextSpace, ModelClass, Policy,
    RewardModel,
};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    /// Fresh contexts per Monte-Carlo estimate (continuous context spaces only).
    pub n_eval: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_eval: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Zero for exact sums.
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapMethod {
    ExactFinite,
    MonteCarlo { n_eval: usize, stderr: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    /// `Q(pi*) - Q(pi)`, from the objective directly.
    pub gap: f64,
    pub method: GapMethod,
    /// `(1/eta) E_x KL(pi(.|x) || pi*(.|x))`.
    pub kl_form: f64,
}

impl GapReport {
    pub fn stderr(&self) -> f64 {
        match self.method {
            GapMethod::ExactFinite => 0.0,
            GapMethod::MonteCarlo { stderr, .. } => stderr,
        }
    }
}

/// Per-context contribution `E_{a~pi}[R*(x,a) - log(pi/pi0)/eta]`.
fn context_objective(
    ref_probs: &[f64],
    truth: &[f64],
    log_probs: &[f64],
    eta: f64,
) -> Result<f64> {
    let mut q = 0.0;
    for a in 0..log_probs.len() {
        let lp = log_probs[a];
        if lp == f64::NEG_INFINITY {
            continue;
        }
        if ref_probs[a] <= 0.0 {
            return Err(Error::SupportViolation { action: a });
        }
        q += lp.exp() * (truth[a] - (lp - ref_probs[a].ln()) / eta);
    }
    Ok(q)
}

/// `KL(pi || q)` from log-probabilities.
fn kl_from_logs(log_p: &[f64], log_q: &[f64]) -> f64 {
    log_p
        .iter()
        .zip(log_q)
        .filter(|(lp, _)| **lp > f64::NEG_INFINITY)
        .map(|(lp, lq)| lp.exp() * (lp - lq))
        .sum()
}

/// Run `f` over the context distribution: an exact weighted sum for finite
/// spaces, a Monte-Carlo mean over fresh contexts otherwise. `f` returns one
/// value per tracked quantity.
fn integrate<F>(
    contexts: &ContextSpace,
    cfg: &EvalConfig,
    width: usize,
    mut f: F,
) -> Result<(Vec<f64>, Option<Vec<f64>>)>
where
    F: FnMut(&Context) -> Result<Vec<f64>>,
{
    match contexts.support() {
        Some(support) => {
            let mut acc = vec![0.0; width];
            for (w, ctx) in support {
                if w == 0.0 {
                    continue;
                }
                for (a, v) in acc.iter_mut().zip(f(&ctx)?) {
                    *a += w * v;
                }
            }
            Ok((acc, None))
        }
        None => {
            if cfg.n_eval < 2 {
                return Err(Error::InvalidArgument("n_eval must be at least 2".into()));
            }
            let mut rng = rng_from_seed(cfg.seed);
            let n = cfg.n_eval as f64;
            let mut mean = vec![0.0; width];
            let mut m2 = vec![0.0; width];
            for i in 0..cfg.n_eval {
                let ctx = contexts.sample(&mut rng);
                for (k, v) in f(&ctx)?.into_iter().enumerate() {
                    let delta = v - mean[k];
                    mean[k] += delta / (i + 1) as f64;
                    m2[k] += delta * (v - mean[k]);
                }
            }
            let stderr = m2.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect();
            Ok((mean, Some(stderr)))
        }
    }
}

/// `Q(pi) = E_x E_{a~pi}[R*(x,a) - log(pi(a|x)/pi0(a|x))/eta]`.
pub fn objective_q<P: Policy + ?Sized>(
    instance: &BanditInstance,
    policy: &P,
    eta: f64,
    cfg: &EvalConfig,
) -> Result<Estimate> {
    check_eta(eta)?;
    let reference = instance.reference();
    let truth = instance.truth();
    let (v, se) = integrate(instance.contexts(), cfg, 1, |ctx| {
        Ok(vec![context_objective(
            &reference.probs(ctx),
            &truth.values(ctx),
            &policy.log_probs(ctx),
            eta,
        )?])
    })?;
    Ok(Estimate {
        value: v[0],
        stderr: se.map_or(0.0, |s| s[0]),
    })
}

/// `Q(pi*) - Q(pi)` together with its KL form.
pub fn suboptimality_gap<P: Policy + ?Sized>(
    instance: &BanditInstance,
    policy: &P,
    eta: f64,
    cfg: &EvalConfig,
) -> Result<GapReport> {
    check_eta(eta)?;
    let reference = instance.reference();
    let truth = instance.truth();
    let (v, se) = integrate(instance.contexts(), cfg, 2, |ctx| {
        let ref_probs = reference.probs(ctx);
        let rewards = truth.values(ctx);
        let optimal = gibbs_row(&ref_probs, &rewards, eta);
        let log_probs = policy.log_probs(ctx);
        let q_opt = context_objective(&ref_probs, &rewards, &optimal.log_probs, eta)?;
        let q = context_objective(&ref_probs, &rewards, &log_probs, eta)?;
        Ok(vec![q_opt - q, kl_from_logs(&log_probs, &optimal.log_probs) / eta])
    })?;
    let method = match se {
        None => GapMethod::ExactFinite,
        Some(se) => GapMethod::MonteCarlo {
            n_eval: cfg.n_eval,
            stderr: se[1],
        },
    };
    Ok(GapReport {
        gap: v[0],
        method,
        kl_form: v[1],
    })
}

/// `(1/eta) E_x log E_{a~pi0} exp(eta R(theta, x, a))`, the optimal value of
/// the objective when `theta` is the truth.
pub fn optimal_value(
    instance: &BanditInstance,
    reward: &RewardModel,
    eta: f64,
    cfg: &EvalConfig,
) -> Result<Estimate> {
    check_eta(eta)?;
    let reference = instance.reference();
    let (v, se) = integrate(instance.contexts(), cfg, 1, |ctx| {
        let row = gibbs_row(&reference.probs(ctx), &reward.values(ctx), eta);
        Ok(vec![row.log_normalizer / eta])
    })?;
    Ok(Estimate {
        value: v[0],
        stderr: se.map_or(0.0, |s| s[0]),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionReport {
    /// Exact `Q(pi*) - Q(pi_theta_hat)`.
    pub gap: f64,
    /// `|gap + (1/eta) E_x[J(x; theta_hat) - J(x; theta*)]|`.
    pub j_identity_residual: f64,
    /// Mean-value point: `eta * gamma * E_x Var_{pi_{f_gamma}}(Delta) = gap`.
    pub mvt_gamma: f64,
    pub mvt_residual: f64,
    /// `eta * max_gamma E_x E_{pi_{f_gamma}}[Delta^2]` over the grid.
    pub second_moment_bound: f64,
    /// `min_gamma |eta E_x Var_{pi_{f_gamma}}(Delta) - gap|` over the grid,
    /// i.e. the mean-value form without the path factor `gamma`.
    pub variance_form_residual: f64,
}

const GAMMA_GRID: usize = 1001;

/// Numerical check of the gap decomposition along the path
/// `f_gamma = gamma * theta_hat + (1 - gamma) * theta*`.
///
/// Along this path `d/dgamma J = -eta^2 gamma Var_{pi_{f_gamma}}(Delta)`, so
/// the mean value theorem gives a `gamma` with
/// `gap = eta * gamma * E_x Var_{pi_{f_gamma}}(Delta)`. The search scans a
/// 1001-point grid and refines by bisection on a bracketing interval.
pub fn decomposition_check(
    instance: &BanditInstance,
    theta_hat: &RewardModel,
    eta: f64,
) -> Result<DecompositionReport> {
    check_eta(eta)?;
    let support = instance.contexts().support().ok_or(Error::ContinuousContexts)?;
    let reference = instance.reference();
    let truth = instance.truth();
    let estimate = planning_oracle(theta_hat, reference, eta)?;
    let exact = EvalConfig::default();
    let gap = suboptimality_gap(instance, &estimate, eta, &exact)?.gap;

    struct Row {
        weight: f64,
        ref_probs: Vec<f64>,
        truth: Vec<f64>,
        delta: Vec<f64>,
    }
    let rows: Vec<Row> = support
        .iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, ctx)| {
            let t = truth.values(ctx);
            let h = theta_hat.values(ctx);
            Row {
                weight: *w,
                ref_probs: reference.probs(ctx),
                delta: h.iter().zip(&t).map(|(a, b)| a - b).collect(),
                truth: t,
            }
        })
        .collect();

    let mut j_diff = 0.0;
    for row in &rows {
        let hat: Vec<f64> = row.truth.iter().zip(&row.delta).map(|(t, d)| t + d).collect();
        let g_hat = gibbs_row(&row.ref_probs, &hat, eta);
        let g_star = gibbs_row(&row.ref_probs, &row.truth, eta);
        let mean_delta: f64 = g_hat.probs.iter().zip(&row.delta).map(|(p, d)| p * d).sum();
        let j_hat = g_hat.log_normalizer - eta * mean_delta;
        let j_star = g_star.log_normalizer;
        j_diff += row.weight * (j_hat - j_star);
    }
    let j_identity_residual = (gap + j_diff / eta).abs();

    // (E_x Var, E_x second moment) under pi_{f_gamma}
    let moments = |gamma: f64| -> (f64, f64) {
        let mut var = 0.0;
        let mut second = 0.0;
        for row in &rows {
            let r: Vec<f64> = row
                .truth
                .iter()
                .zip(&row.delta)
                .map(|(t, d)| t + gamma * d)
                .collect();
            let g = gibbs_row(&row.ref_probs, &r, eta);
            let m1: f64 = g.probs.iter().zip(&row.delta).map(|(p, d)| p * d).sum();
            let m2: f64 = g.probs.iter().zip(&row.delta).map(|(p, d)| p * d * d).sum();
            var += row.weight * (m2 - m1 * m1).max(0.0);
            second += row.weight * m2;
        }
        (var, second)
    };
    let h = |gamma: f64| eta * gamma * moments(gamma).0 - gap;

    let grid: Vec<f64> = (0..GAMMA_GRID)
        .map(|i| i as f64 / (GAMMA_GRID - 1) as f64)
        .collect();
    let mut h_values = Vec::with_capacity(GAMMA_GRID);
    let mut second_moment_max: f64 = 0.0;
    let mut variance_form_residual = f64::INFINITY;
    for &g in &grid {
        let (var, second) = moments(g);
        h_values.push(eta * g * var - gap);
        second_moment_max = second_moment_max.max(second);
        variance_form_residual = variance_form_residual.min((eta * var - gap).abs());
    }

    let (mut best_gamma, mut best) = grid
        .iter()
        .zip(&h_values)
        .map(|(g, v)| (*g, v.abs()))
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    if let Some(i) = (0..GAMMA_GRID - 1).find(|&i| h_values[i] * h_values[i + 1] < 0.0) {
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let lo_negative = h_values[i] < 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let v = h(mid);
            if v.abs() < best {
                best = v.abs();
                best_gamma = mid;
            }
            if (v < 0.0) == lo_negative {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
    }

    Ok(DecompositionReport {
        gap,
        j_identity_residual,
        mvt_gamma: best_gamma,
        mvt_residual: best,
        second_moment_bound: eta * second_moment_max,
        variance_form_residual,
    })
}

/// `max_{x, a, gamma} pi_{f_gamma}(a|x) / pi_{base}(a|x)` over finite contexts,
/// with `f_gamma = gamma * theta_hat + (1 - gamma) * theta*` and supported `(x, a)`.
pub fn mixture_ratio_sup(
    instance: &BanditInstance,
    base: &RewardModel,
    theta_hat: &RewardModel,
    eta: f64,
    gammas: &[f64],
) -> Result<f64> {
    check_eta(eta)?;
    let support = instance.contexts().support().ok_or(Error::ContinuousContexts)?;
    let reference = instance.reference();
    let mut sup: f64 = 0.0;
    for (w, ctx) in support.iter().filter(|(w, _)| *w > 0.0) {
        let _ = w;
        let p0 = reference.probs(ctx);
        let denom = gibbs_row(&p0, &base.values(ctx), eta);
        let t = instance.truth().values(ctx);
        let h = theta_hat.values(ctx);
        for &g in gammas {
            let r: Vec<f64> = t.iter().zip(&h).map(|(t, h)| g * h + (1.0 - g) * t).collect();
            let num = gibbs_row(&p0, &r, eta);
            for a in 0..p0.len() {
                if p0[a] > 0.0 {
                    sup = sup.max((num.log_probs[a] - denom.log_probs[a]).exp());
                }
            }
        }
    }
    Ok(sup)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoverageConfig {
    /// Contexts sampled when the context space is continuous.
    pub pool: usize,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            pool: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageReport {
    /// `sup ||psi(x,a)||^2_{Sigma^-1}` over the support of `d0 x pi0`.
    pub d2: f64,
    /// Same with features centered by their `pi0` mean at each context.
    pub d2_centered: f64,
    /// `sup 1/pi0(a|x)`.
    pub c_global: f64,
    /// `exp(2 eta B)`, an upper bound on the local KL-ball coefficient.
    pub c_local_bound: f64,
    pub rho: f64,
    /// `true` when the suprema were taken over a sampled context pool, in
    /// which case `d2` and `d2_centered` underestimate the true suprema.
    pub sampled: bool,
}

/// Coverage coefficients of `pi0` for the given reward class.
pub fn coverage_coefficients(
    instance: &BanditInstance,
    class: ModelClass,
    eta: f64,
    cfg: &CoverageConfig,
) -> Result<CoverageReport> {
    check_eta(eta)?;
    let actions = instance.num_actions();
    if class.actions() != actions {
        return Err(Error::InvalidArgument("model class action count mismatch".into()));
    }
    let (weighted, sampled): (Vec<(f64, Context)>, bool) = match instance.contexts().support() {
        Some(s) => (s, false),
        None => {
            if cfg.pool == 0 {
                return Err(Error::InvalidArgument("coverage pool must be nonempty".into()));
            }
            let mut rng = rng_from_seed(cfg.seed);
            let w = 1.0 / cfg.pool as f64;
            let pool = (0..cfg.pool)
                .map(|_| (w, instance.sample_context(&mut rng)))
                .collect();
            (pool, true)
        }
    };
    for (_, ctx) in &weighted {
        class.check_context(ctx)?;
    }

    let reference = instance.reference();
    let p = class.num_params();
    let mut points = Vec::new();
    let mut centered = Vec::new();
    let mut c_global: f64 = 0.0;
    for (w, ctx) in weighted.iter().filter(|(w, _)| *w > 0.0) {
        let p0 = reference.probs(ctx);
        let feats: Vec<DVector<f64>> = (0..actions)
            .map(|a| DVector::from_vec(class.dense_feature(ctx, a)))
            .collect();
        let mut mean = DVector::zeros(p);
        for (f, q) in feats.iter().zip(&p0) {
            mean.axpy(*q, f, 1.0);
        }
        for a in 0..actions {
            c_global = c_global.max(1.0 / p0[a]);
            if p0[a] > 0.0 {
                points.push((w * p0[a], feats[a].clone()));
                centered.push((w * p0[a], &feats[a] - &mean));
            }
        }
    }
    let rho = 2.0 * eta * instance.truth().bound();
    Ok(CoverageReport {
        d2: max_leverage(&points),
        d2_centered: max_leverage(&centered),
        c_global,
        c_local_bound: rho.exp(),
        rho,
        sampled,
    })
}

/// `max_i psi_i^T Sigma^+ psi_i` with `Sigma = sum_i w_i psi_i psi_i^T`.
fn max_leverage(points: &[(f64, DVector<f64>)]) -> f64 {
    let queries: Vec<&DVector<f64>> = points.iter().map(|(_, f)| f).collect();
    leverages(points, &queries).into_iter().fold(0.0, f64::max)
}

/// `q^T Sigma^+ q` for each query, with `Sigma = sum_i w_i psi_i psi_i^T`.
/// Eigenvalues below `1e-10 * largest` count as zero; a query with a
/// component outside the retained span gets infinity.
fn leverages(design: &[(f64, DVector<f64>)], queries: &[&DVector<f64>]) -> Vec<f64> {
    let p = design.first().map_or(0, |(_, f)| f.len());
    if p == 0 {
        return vec![f64::NAN; queries.len()];
    }
    let mut sigma = DMatrix::<f64>::zeros(p, p);
    for (w, f) in design {
        sigma.ger(*w, f, f, 1.0);
    }
    let eig = SymmetricEigen::new(sigma);
    let largest = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if largest <= 0.0 {
        return vec![f64::INFINITY; queries.len()];
    }
    let keep: Vec<usize> = (0..p)
        .filter(|&k| eig.eigenvalues[k] > 1e-10 * largest)
        .collect();
    queries
        .iter()
        .map(|f| {
            let norm2 = f.norm_squared();
            let mut lev = 0.0;
            let mut captured = 0.0;
            for &k in &keep {
                let c = eig.eigenvectors.column(k).dot(*f);
                captured += c * c;
                lev += c * c / eig.eigenvalues[k];
            }
            if norm2 - captured > 1e-8 * norm2.max(1.0) {
                f64::INFINITY
            } else {
                lev
            }
        })
        .collect()
}

/// Leverages `psi^T Sigma^+ psi` of the `queries` under the design
/// `Sigma = sum_i w_i psi_i psi_i^T`.
pub fn design_leverages(design: &[(f64, Vec<f64>)], queries: &[Vec<f64>]) -> Vec<f64> {
    let design: Vec<(f64, DVector<f64>)> = design
        .iter()
        .map(|(w, f)| (*w, DVector::from_column_slice(f)))
        .collect();
    let queries: Vec<DVector<f64>> = queries.iter().map(|q| DVector::from_column_slice(q)).collect();
    let refs: Vec<&DVector<f64>> = queries.iter().collect();
    leverages(&design, &refs)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")))
    }
}
