//! The invariant suites behind `klreg verify`. Each check reports a worst
//! residual; `fast` caps random draws at 10 per check.

use std::fmt;

use rand::Rng;

use crate::algo::{
    pool, theorem_sample_sizes, AlgoConfig, Algorithm, Feedback, TheoryBudget,
};
use crate::bandit::{
    gibbs_row, planning_oracle, random::random_simplex, random::random_small_instance,
    random::random_table, random::random_tabular_instance, random::sphere_linear_instance,
    sigmoid, ActionSpace, BanditInstance, ContextSpace, ModelClass, NoiseModel, Policy,
    ReferencePolicy, RewardModel,
};
use crate::error::Result;
use crate::estimate::{
    bt_log_likelihood, bt_mle_fit, least_squares_fit, squared_loss, FitConfig,
};
use crate::eval::{
    coverage_coefficients, decomposition_check, design_leverages, mixture_ratio_sup,
    objective_q, optimal_value, suboptimality_gap, CoverageConfig, EvalConfig,
};
use crate::hardcase::{build_hard_instance, kl_bound_check, Flavor, HardInstanceSpec};
use crate::seed::{derive_rng, Purpose, SimRng};

use super::config::{ContextKind, ExperimentConfig, InstanceSpec, ReferenceKind, SweepSpec};
use super::csvio::{read_raw, read_summary, write_raw, write_summary};
use super::sweep::{mean_std, run_cells, summarize, sweep_cells};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    fn draws(self, full: usize) -> usize {
        match self {
            Level::Fast => full.min(10),
            Level::Full => full,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub draws: usize,
    /// Worst residual against the check's tolerance.
    pub residual: f64,
    pub tolerance: f64,
    pub note: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<34} draws={:<5} residual={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.draws,
            self.residual,
            self.tolerance
        )?;
        if !self.note.is_empty() {
            write!(f, "  {}", self.note)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} checks, {} failed",
            self.checks.len(),
            failed
        )
    }
}

/// Maps `(pi0 row, rewards, eta)` to a policy row.
pub type Planner<'a> = &'a (dyn Fn(&[f64], &[f64], f64) -> Vec<f64> + Sync);

pub fn default_planner(reference: &[f64], rewards: &[f64], eta: f64) -> Vec<f64> {
    gibbs_row(reference, rewards, eta).probs
}

/// Runs every suite with the library's planner.
pub fn run_verify(level: Level) -> VerifyReport {
    run_verify_with(level, &default_planner)
}

/// Runs every suite, feeding `planner` to the normalization check.
pub fn run_verify_with(level: Level, planner: Planner<'_>) -> VerifyReport {
    type Suite = fn(Level, &mut SimRng) -> Result<Check>;
    let suites: [(&'static str, Suite); 16] = [
        ("core.bt_antisymmetry", bt_antisymmetry),
        ("core.reference_fixed_point", reference_fixed_point),
        ("eval.gap_identity", gap_identity),
        ("eval.optimal_value_identity", optimal_value_identity),
        ("eval.decomposition", decomposition),
        ("eval.gauge_invariance", gauge_invariance),
        ("eval.coverage_monotonicity", coverage_monotonicity),
        ("estimate.noiseless_least_squares", noiseless_least_squares),
        ("estimate.bt_stationarity", bt_stationarity),
        ("algo.pooling", pooling),
        ("algo.determinism", determinism),
        ("algo.intermediate_coverage", intermediate_coverage),
        ("hardcase.kl_bounds", kl_bounds),
        ("hardcase.optimal_mass", optimal_mass),
        ("cli.csv_round_trip", csv_round_trip),
        ("cli.summary_recompute", summary_recompute),
    ];
    let mut checks = Vec::with_capacity(suites.len() + 1);
    let mut rng = derive_rng(0x6b6c_7265_67, 0, 0, Purpose::Truth);
    checks.push(normalization(level, &mut rng, planner));
    for (i, (name, suite)) in suites.iter().enumerate() {
        let mut rng = derive_rng(0x6b6c_7265_67, 0, i as u64 + 1, Purpose::Truth);
        checks.push(suite(level, &mut rng).unwrap_or_else(|e| Check {
            name,
            passed: false,
            draws: 0,
            residual: f64::NAN,
            tolerance: 0.0,
            note: format!("error: {e}"),
        }));
    }
    VerifyReport { checks }
}

fn check(name: &'static str, draws: usize, residual: f64, tolerance: f64) -> Check {
    Check {
        name,
        passed: residual <= tolerance,
        draws,
        residual,
        tolerance,
        note: String::new(),
    }
}

fn with_note(mut c: Check, note: impl Into<String>) -> Check {
    c.note = note.into();
    c
}

const ETAS: [f64; 3] = [0.25, 1.0, 4.0];

fn random_estimate<R: Rng + ?Sized>(instance: &BanditInstance, rng: &mut R) -> Result<RewardModel> {
    let class = instance.model_class();
    let (m, a) = match class {
        ModelClass::Tabular { contexts, actions } => (contexts, actions),
        ModelClass::Linear { .. } => unreachable!("tabular instances only"),
    };
    RewardModel::tabular(random_table(m, a, rng), 1.0)
}

/// Policy rows sum to one and stay inside the reference support.
fn normalization(level: Level, rng: &mut SimRng, planner: Planner<'_>) -> Check {
    let draws = level.draws(100);
    let mut worst: f64 = 0.0;
    for i in 0..draws {
        let actions = rng.random_range(1..=6);
        let mut p0 = random_simplex(actions, rng);
        if actions > 1 && rng.random_bool(0.3) {
            // drop one action from the support
            let k = rng.random_range(0..actions);
            let mass = p0[k];
            p0[k] = 0.0;
            let j = (k + 1) % actions;
            p0[j] += mass;
        }
        let rewards: Vec<f64> = (0..actions).map(|_| rng.random_range(-5.0..5.0)).collect();
        let pi = planner(&p0, &rewards, ETAS[i % 3]);
        let total: f64 = pi.iter().sum();
        worst = worst.max((total - 1.0).abs());
        for (p, q) in pi.iter().zip(&p0) {
            if *p < 0.0 || (*q == 0.0 && *p != 0.0) || !p.is_finite() {
                worst = f64::INFINITY;
            }
        }
    }
    check("core.normalization", draws, worst, 1e-12)
}

fn bt_antisymmetry(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(1000);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let u: f64 = rng.random_range(-50.0..50.0);
        worst = worst.max((sigmoid(u) + sigmoid(-u) - 1.0).abs());
    }
    let instance = random_tabular_instance(3, 4, rng)?;
    for (_, ctx) in instance.contexts().support().unwrap_or_default() {
        for a in 0..4 {
            for b in 0..4 {
                let s = instance.preference_probability(&ctx, a, b)
                    + instance.preference_probability(&ctx, b, a);
                worst = worst.max((s - 1.0).abs());
            }
        }
    }
    Ok(check("core.bt_antisymmetry", draws, worst, 0.0))
}

/// A reward that is constant per context plans to the reference policy.
fn reference_fixed_point(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(100);
    let mut worst: f64 = 0.0;
    for i in 0..draws {
        let instance = random_small_instance(6, 4, rng)?;
        let support = instance.contexts().support().unwrap_or_default();
        let a = instance.num_actions();
        let table = (0..support.len())
            .map(|_| vec![rng.random::<f64>(); a])
            .collect();
        let pi = planning_oracle(&RewardModel::tabular(table, 1.0)?, instance.reference(), ETAS[i % 3])?;
        for (_, ctx) in &support {
            for (p, q) in pi.probs(ctx).iter().zip(instance.reference().probs(ctx)) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    Ok(check("core.reference_fixed_point", draws, worst, 1e-15))
}

/// Direct gap equals its KL form.
fn gap_identity(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(100);
    let exact = EvalConfig::default();
    let mut worst: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..draws {
        let instance = random_small_instance(6, 4, rng)?;
        let estimate = random_estimate(&instance, rng)?;
        for eta in ETAS {
            let pi = planning_oracle(&estimate, instance.reference(), eta)?;
            let r = suboptimality_gap(&instance, &pi, eta, &exact)?;
            worst = worst.max((r.gap - r.kl_form).abs());
            min_gap = min_gap.min(r.gap);
        }
    }
    let mut c = check("eval.gap_identity", draws, worst, 1e-9);
    c.passed &= min_gap >= -1e-9;
    Ok(with_note(c, format!("min_gap={min_gap:.3e}")))
}

/// `Q(pi_theta) = (1/eta) E log E_{pi0} exp(eta R_theta)` when theta is the truth.
fn optimal_value_identity(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(100);
    let exact = EvalConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let instance = random_small_instance(6, 4, rng)?;
        for eta in ETAS {
            let pi = instance.optimal_policy(eta)?;
            let q = objective_q(&instance, &pi, eta, &exact)?.value;
            let v = optimal_value(&instance, instance.truth(), eta, &exact)?.value;
            worst = worst.max((q - v).abs());
        }
    }
    Ok(check("eval.optimal_value_identity", draws, worst, 1e-9))
}

/// J-identity, mean-value root, and the second-moment upper bound.
fn decomposition(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(50);
    let mut j: f64 = 0.0;
    let mut mvt: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for i in 0..draws {
        let instance = random_tabular_instance(3, 3, rng)?;
        let estimate = random_estimate(&instance, rng)?;
        let eta = [0.5, 1.0, 4.0][i % 3];
        let r = decomposition_check(&instance, &estimate, eta)?;
        j = j.max(r.j_identity_residual / 1e-9);
        mvt = mvt.max(r.mvt_residual / (1e-6 * (1.0 + r.gap)));
        bound = bound.max((r.gap - r.second_moment_bound) / 1e-6);
    }
    // each term is normalized by its own tolerance
    let worst = j.max(mvt).max(bound);
    Ok(with_note(
        check("eval.decomposition", draws, worst, 1.0),
        format!("j/tol={j:.2e} mvt/tol={mvt:.2e} bound_excess/tol={bound:.2e}"),
    ))
}

/// Planning on `R` and on `R + b(x)` gives the same gap report.
fn gauge_invariance(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(100);
    let exact = EvalConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..draws {
        let instance = random_small_instance(6, 4, rng)?;
        let estimate = random_estimate(&instance, rng)?;
        let m = instance.contexts().count().unwrap_or(0);
        let shift: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let shifted = estimate.gauge_shift(&shift);
        let eta = ETAS[i % 3];
        let a = suboptimality_gap(&instance, &planning_oracle(&estimate, instance.reference(), eta)?, eta, &exact)?;
        let b = suboptimality_gap(&instance, &planning_oracle(&shifted, instance.reference(), eta)?, eta, &exact)?;
        worst = worst
            .max((a.gap - b.gap).abs())
            .max((a.kl_form - b.kl_form).abs());
    }
    Ok(check("eval.gauge_invariance", draws, worst, 1e-12))
}

/// Adding design mass never raises the leverage of the original support
/// points; also `d2 >= 1` and `c_global >= 1`.
fn coverage_monotonicity(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(100);
    let mut worst: f64 = 0.0;
    let mut floor_violation: f64 = 0.0;
    for _ in 0..draws {
        let m = rng.random_range(1..=4);
        let a = rng.random_range(2..=4);
        let class = ModelClass::Tabular { contexts: m, actions: a };
        let weights = random_simplex(m, rng);
        let mut rows = Vec::new();
        for _ in 0..m {
            let mut row = random_simplex(a, rng);
            let k = rng.random_range(0..a);
            let mass = row[k];
            row[k] = 0.0;
            row[(k + 1) % a] += mass;
            rows.push(row);
        }
        let mut design = Vec::new();
        let mut extra = Vec::new();
        for x in 0..m {
            let ctx = crate::bandit::Context::indexed(x);
            for act in 0..a {
                let psi = class.dense_feature(&ctx, act);
                if rows[x][act] > 0.0 {
                    design.push((weights[x] * rows[x][act], psi));
                } else {
                    extra.push((rng.random_range(0.01..1.0), psi));
                }
            }
        }
        let queries: Vec<Vec<f64>> = design.iter().map(|(_, f)| f.clone()).collect();
        let before = design_leverages(&design, &queries);
        let mut enlarged = design.clone();
        enlarged.extend(extra);
        // also add mass on points already in the support
        enlarged.push((0.3, queries[0].clone()));
        let after = design_leverages(&enlarged, &queries);
        for (b, a) in before.iter().zip(&after) {
            worst = worst.max((a - b) / (1.0 + b));
        }

        let instance = BanditInstance::new(
            ContextSpace::finite(weights, None)?,
            ActionSpace::new(a)?,
            RewardModel::tabular(random_table(m, a, rng), 1.0)?,
            NoiseModel::Bernoulli,
            ReferencePolicy::uniform(a),
        )?;
        let r = coverage_coefficients(&instance, class, 1.0, &CoverageConfig::default())?;
        floor_violation = floor_violation.max(1.0 - r.d2).max(1.0 - r.c_global);
    }
    let mut c = check("eval.coverage_monotonicity", draws, worst, 1e-9);
    c.passed &= floor_violation <= 1e-12;
    Ok(with_note(c, format!("d2_floor_violation={floor_violation:.2e}")))
}

/// Noise-free least squares recovers the truth on every observed cell, and
/// exactly for linear models with a full-rank design.
fn noiseless_least_squares(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(100);
    let mut worst: f64 = 0.0;
    for i in 0..draws {
        if i % 2 == 0 {
            let m = rng.random_range(1..=6);
            let a = rng.random_range(2..=4);
            let instance = BanditInstance::new(
                ContextSpace::finite_uniform(m)?,
                ActionSpace::new(a)?,
                RewardModel::tabular(random_table(m, a, rng), 1.0)?,
                NoiseModel::Gaussian { sigma: 0.0 },
                ReferencePolicy::uniform(a),
            )?;
            let samples = crate::bandit::collect_rewards(&instance, instance.reference(), 40 * m * a, rng);
            let fit = least_squares_fit(&samples, instance.model_class(), &FitConfig::default())?;
            for s in &samples {
                let e = fit.model.value(&s.context, s.action) - instance.truth().value(&s.context, s.action);
                worst = worst.max(e.abs());
            }
        } else {
            let instance = sphere_linear_instance(4, 3, 1.0, 0.0, rng)?;
            let samples = crate::bandit::collect_rewards(&instance, instance.reference(), 200, rng);
            let fit = least_squares_fit(&samples, instance.model_class(), &FitConfig::default().with_ridge(0.0))?;
            for (p, q) in fit.model.params().iter().zip(instance.truth().params()) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    Ok(check("estimate.noiseless_least_squares", draws, worst, 1e-8))
}

/// Gradient max-norm at the unpenalized BT optimum.
fn bt_stationarity(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(20);
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for _ in 0..draws {
        let instance = random_tabular_instance(2, 3, rng)?;
        let samples = crate::bandit::collect_preferences(&instance, instance.reference(), 3000, rng);
        let fit = bt_mle_fit(&samples, instance.model_class(), &FitConfig::default().with_ridge(0.0))?;
        if fit.separable {
            skipped += 1;
            continue;
        }
        worst = worst.max(fit.grad_max_norm);
    }
    Ok(with_note(
        check("estimate.bt_stationarity", draws, worst, 1e-8),
        format!("separable_skipped={skipped}"),
    ))
}

/// The pooled fit is at least as good as the stage-1 fit on pooled data.
fn pooling(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(20);
    let mut worst: f64 = 0.0;
    for i in 0..draws {
        let instance = random_tabular_instance(2, 2, rng)?;
        let eta = ETAS[i % 3];
        if i % 2 == 0 {
            let out = Algorithm::Tmps.run(&instance, &AlgoConfig::new(eta, 200, 200, Feedback::Reward), rng)?;
            let pooled = pool(&out.trace.stage1, &out.trace.stage2);
            let s = pooled.as_rewards().unwrap_or_default();
            let a = squared_loss(s, &out.trace.final_fit.unclamped);
            let b = squared_loss(s, &out.trace.first_fit.unclamped);
            worst = worst.max((a - b) / (1.0 + b.abs()));
        } else {
            let out = Algorithm::TmpsPf.run(&instance, &AlgoConfig::new(eta, 300, 300, Feedback::Preference), rng)?;
            let pooled = pool(&out.trace.stage1, &out.trace.stage2);
            let s = pooled.as_preferences().unwrap_or_default();
            let ridge = FitConfig::default().ridge;
            let a = bt_log_likelihood(s, &out.trace.final_fit.unclamped, ridge);
            let b = bt_log_likelihood(s, &out.trace.first_fit.unclamped, ridge);
            worst = worst.max((b - a) / (1.0 + b.abs()));
        }
    }
    Ok(check("algo.pooling", draws, worst, 1e-9))
}

/// Same seed, same output; a two-stage run with `n = 0` is the offline run.
fn determinism(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(10);
    let mut mismatches = 0usize;
    for i in 0..draws {
        let instance = random_tabular_instance(3, 3, rng)?;
        let seed: u64 = rng.random();
        let (mixed, offline, fb) = if i % 2 == 0 {
            (Algorithm::Tmps, Algorithm::Offline, Feedback::Reward)
        } else {
            (Algorithm::TmpsPf, Algorithm::OfflinePf, Feedback::Preference)
        };
        let cfg = AlgoConfig::new(1.0, 100, 50, fb);
        let run = |algo: Algorithm, cfg: &AlgoConfig| {
            let mut r = crate::seed::rng_from_seed(seed);
            algo.run(&instance, cfg, &mut r)
        };
        let a = run(mixed, &cfg)?;
        let b = run(mixed, &cfg)?;
        if a.policy.reward().params() != b.policy.reward().params() {
            mismatches += 1;
        }
        let zero = AlgoConfig::new(1.0, 150, 0, fb);
        let c = run(mixed, &zero)?;
        let d = run(offline, &zero)?;
        if c.policy.reward().params() != d.policy.reward().params() {
            mismatches += 1;
        }
    }
    Ok(check("algo.determinism", draws, mismatches as f64, 0.0))
}

/// With a theory-scale first stage, policies along the path from the final
/// estimate to the truth stay within `e^4 (1 + 0.1)` of the intermediate policy.
fn intermediate_coverage(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(10);
    let (m_ctx, a) = (2usize, 2usize);
    let eta = 1.0;
    let budget = TheoryBudget {
        epsilon: 0.05,
        delta: 0.1,
        // (1/0.05)^(M A) cells of a grid cover of [0, 1]^(M A)
        cover_count: 20f64.powi((m_ctx * a) as i32),
        cover_radius: 0.05,
        coverage: (m_ctx * a) as f64,
    };
    let sizes = theorem_sample_sizes(&budget, eta, 1.0, Feedback::Reward)?;
    let m = sizes.m as usize;
    let gammas: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let mut worst: f64 = 0.0;
    for i in 0..draws {
        let instance = BanditInstance::new(
            ContextSpace::finite_uniform(m_ctx)?,
            ActionSpace::new(a)?,
            RewardModel::tabular(random_table(m_ctx, a, rng), 1.0)?,
            NoiseModel::Bernoulli,
            ReferencePolicy::uniform(a),
        )?;
        let algo = if i % 2 == 0 { Algorithm::Tmps } else { Algorithm::TmpsPf };
        let out = algo.run(&instance, &AlgoConfig::new(eta, m, m, algo.feedback()), rng)?;
        let ratio = mixture_ratio_sup(
            &instance,
            &out.trace.first_fit.model,
            &out.trace.final_fit.model,
            eta,
            &gammas,
        )?;
        worst = worst.max(ratio);
    }
    Ok(with_note(
        check("algo.intermediate_coverage", draws, worst, 4f64.exp() * 1.1),
        format!("m={m}"),
    ))
}

fn kl_bounds(_level: Level, _rng: &mut SimRng) -> Result<Check> {
    let grid: Vec<f64> = (1..=24).map(|k| k as f64 / 100.0).collect();
    let rows = kl_bound_check(&grid)?;
    let worst = rows
        .iter()
        .map(|r| (r.reward_kl - r.reward_bound).max(r.preference_kl - r.preference_bound))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(check("hardcase.kl_bounds", grid.len(), worst, 0.0))
}

/// `pi*(theta(x)|x) = e^{eta c} / (e^{eta c} + 1)` and both flavors agree.
fn optimal_mass(level: Level, rng: &mut SimRng) -> Result<Check> {
    let draws = level.draws(100);
    let mut worst: f64 = 0.0;
    for i in 0..draws {
        let contexts = rng.random_range(2..=8);
        let c = rng.random_range(0.001..0.249);
        let theta_map = HardInstanceSpec::random_theta_map(contexts, rng);
        let eta = [0.5, 1.0, 4.0][i % 3];
        let spec = |flavor| HardInstanceSpec {
            contexts,
            c,
            theta_map: theta_map.clone(),
            flavor,
        };
        let r = build_hard_instance(&spec(Flavor::RewardFeedback))?;
        let p = build_hard_instance(&spec(Flavor::PreferenceFeedback))?;
        let (pr, pp) = (r.optimal_policy(eta)?, p.optimal_policy(eta)?);
        let expected = (eta * c).exp() / ((eta * c).exp() + 1.0);
        for (x, (_, ctx)) in r.contexts().support().unwrap_or_default().iter().enumerate() {
            let (u, v) = (pr.probs(ctx), pp.probs(ctx));
            let t = theta_map[x] as usize;
            worst = worst
                .max((u[t] - expected).abs())
                .max((u[0] - v[0]).abs())
                .max((u[1] - v[1]).abs());
        }
    }
    Ok(check("hardcase.optimal_mass", draws, worst, 1e-12))
}

fn small_sweep_config(repeats: usize) -> ExperimentConfig {
    ExperimentConfig {
        seed: 11,
        repeats,
        n_eval: 1000,
        workers: 1,
        output: None,
        timing: false,
        instance: InstanceSpec {
            contexts: ContextKind::Finite,
            count: Some(3),
            dim: None,
            actions: 3,
            table: None,
            radius: 5.0,
            noise: None,
            sigma: 0.1,
            reference: ReferenceKind::Random,
        },
        sweep: Some(SweepSpec {
            etas: vec![0.5, 2.0],
            grid: vec![[8, 8], [32, 16]],
            algorithms: vec![Algorithm::Tmps, Algorithm::Offline, Algorithm::TmpsPf],
        }),
        figures: None,
        coverage: None,
    }
}

fn csv_round_trip(level: Level, _rng: &mut SimRng) -> Result<Check> {
    let cfg = small_sweep_config(level.draws(5));
    let rows = run_cells(&cfg, &sweep_cells(&cfg)?)?;
    let mut buf = Vec::new();
    write_raw(&mut buf, &rows)?;
    let back = read_raw(buf.as_slice())?;
    let mut again = Vec::new();
    write_raw(&mut again, &back)?;
    let mismatch = (back != rows) as usize + (again != buf) as usize;
    Ok(check("cli.csv_round_trip", rows.len(), mismatch as f64, 0.0))
}

fn summary_recompute(level: Level, _rng: &mut SimRng) -> Result<Check> {
    let cfg = small_sweep_config(level.draws(5));
    let rows = run_cells(&cfg, &sweep_cells(&cfg)?)?;
    let mut buf = Vec::new();
    write_summary(&mut buf, &["check".to_string()], &summarize(&rows))?;
    let summary = read_summary(buf.as_slice())?;
    let mut worst: f64 = 0.0;
    for s in &summary {
        let gaps: Vec<f64> = rows
            .iter()
            .filter(|r| r.algorithm == s.algorithm && r.eta == s.eta && r.total == s.total)
            .map(|r| r.gap)
            .collect();
        let (mean, std) = mean_std(&gaps);
        worst = worst
            .max((mean - s.mean_gap).abs())
            .max((std - s.std_gap).abs());
        if gaps.len() != s.count {
            worst = f64::INFINITY;
        }
    }
    Ok(check("cli.summary_recompute", summary.len(), worst, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let report = run_verify(Level::Fast);
        assert!(report.passed(), "{report}");
        assert_eq!(report.checks.len(), 17);
    }

    #[test]
    fn unnormalized_planner_fails_normalization() {
        let broken = |p0: &[f64], r: &[f64], eta: f64| -> Vec<f64> {
            p0.iter().zip(r).map(|(p, r)| p * (eta * r).exp()).collect()
        };
        let report = run_verify_with(Level::Fast, &broken);
        let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
        assert_eq!(failed, vec!["core.normalization"]);
    }
}
