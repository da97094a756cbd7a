//! Sweep execution. Every (cell, repeat) pair is one run; runs execute on a
//! rayon pool and come back in config order.

use std::time::Instant;

use rayon::prelude::*;

use crate::algo::{AlgoConfig, Algorithm, Feedback};
use crate::bandit::BanditInstance;
use crate::error::{Error, Result};
use crate::eval::{suboptimality_gap, EvalConfig};
use crate::seed::{derive_rng, derive_seed, Purpose};

use super::config::ExperimentConfig;

/// One point of a sweep grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub m: usize,
    pub n: usize,
    /// Sampling stream index. Cells sharing it (and a repeat) draw from the
    /// same random numbers, e.g. a two-stage run and its offline baseline.
    pub stage: u64,
}

impl Cell {
    pub fn total(&self) -> usize {
        self.m + self.n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub algorithm: Algorithm,
    pub feedback: Feedback,
    pub eta: f64,
    pub m: usize,
    pub n: usize,
    pub total: usize,
    /// Seed of the sampling stream for this run.
    pub seed: u64,
    pub gap: f64,
    pub gap_stderr: f64,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub feedback: Feedback,
    pub eta: f64,
    pub total: usize,
    pub count: usize,
    pub mean_gap: f64,
    /// Sample standard deviation over repeats; 0 for a single repeat.
    pub std_gap: f64,
}

/// Cells of the `[sweep]` section, ordered eta, grid point, algorithm.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "section missing"))?;
    let mut cells = Vec::new();
    for &eta in &sweep.etas {
        for (i, &[m, n]) in sweep.grid.iter().enumerate() {
            for &algorithm in &sweep.algorithms {
                cells.push(Cell {
                    algorithm,
                    eta,
                    m,
                    n,
                    stage: i as u64,
                });
            }
        }
    }
    Ok(cells)
}

/// `m = ceil(T/2)`, `n = T - m`.
pub fn even_split(total: usize) -> (usize, usize) {
    let m = total.div_ceil(2);
    (m, total - m)
}

/// Runs each cell once per repeat. Rows are ordered by cell, then repeat.
pub fn run_cells(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<Vec<RawRow>> {
    let instances: Vec<BanditInstance> = (0..cfg.repeats as u64)
        .map(|r| cfg.instance.build(cfg.seed, r))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.repeats).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| run_one(cfg, &instances[r], &cells[c], r as u64))
            .collect()
    })
}

fn run_one(
    cfg: &ExperimentConfig,
    instance: &BanditInstance,
    cell: &Cell,
    repeat: u64,
) -> Result<RawRow> {
    let start = Instant::now();
    let feedback = cell.algorithm.feedback();
    let (m, n) = if cell.algorithm.is_offline() {
        (cell.total(), 0)
    } else {
        (cell.m, cell.n)
    };
    let algo = AlgoConfig::new(cell.eta, m, n, feedback);
    let seed = derive_seed(cfg.seed, repeat, cell.stage, Purpose::Sampling);
    let mut rng = derive_rng(cfg.seed, repeat, cell.stage, Purpose::Sampling);
    let out = cell.algorithm.run(instance, &algo, &mut rng)?;
    let eval = EvalConfig {
        n_eval: cfg.n_eval,
        seed: derive_seed(cfg.seed, repeat, 0, Purpose::Evaluation),
    };
    let report = suboptimality_gap(instance, &out.policy, cell.eta, &eval)?;
    let wall_ms = if cfg.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(RawRow {
        algorithm: cell.algorithm,
        feedback,
        eta: cell.eta,
        m: cell.m,
        n: cell.n,
        total: cell.total(),
        seed,
        gap: report.gap,
        gap_stderr: report.stderr(),
        wall_ms,
    })
}

/// Mean and sample standard deviation per (algorithm, eta, total), in order
/// of first appearance.
pub fn summarize(rows: &[RawRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Algorithm, u64, usize)> = Vec::new();
    let mut groups: Vec<Vec<&RawRow>> = Vec::new();
    for row in rows {
        let key = (row.algorithm, row.eta.to_bits(), row.total);
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(row),
            None => {
                keys.push(key);
                groups.push(vec![row]);
            }
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let gaps: Vec<f64> = g.iter().map(|r| r.gap).collect();
            let (mean, std) = mean_std(&gaps);
            SummaryRow {
                algorithm: g[0].algorithm,
                feedback: g[0].feedback,
                eta: g[0].eta,
                total: g[0].total,
                count: gaps.len(),
                mean_gap: mean,
                std_gap: std,
            }
        })
        .collect()
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}
