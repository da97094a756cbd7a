//! The `run`, `coverage` and `figures` commands: config in, CSV files out.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::algo::{Algorithm, Feedback};
use crate::error::{Error, Result};
use crate::eval::{coverage_coefficients, CoverageConfig};
use crate::seed::{derive_seed, Purpose};

use super::config::{ContextKind, ExperimentConfig};
use super::csvio::{
    write_coverage, write_figure, write_raw, write_summary, CoverageRow, FigureRow,
};
use super::sweep::{even_split, mean_std, run_cells, summarize, sweep_cells, Cell, RawRow, SummaryRow};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "KLREG_OUT";

/// `--out`, else the config's `output`, else `$KLREG_OUT`, else `./out`.
pub fn output_dir(cli_out: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

#[derive(Clone, Debug)]
pub struct RunOutputFiles {
    pub raw_path: PathBuf,
    pub summary_path: PathBuf,
    pub rows: Vec<RawRow>,
    pub summary: Vec<SummaryRow>,
}

/// Metadata lines heading `summary.csv`.
pub fn summary_metadata(cfg: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("master_seed={}", cfg.seed),
        format!("repeats={}", cfg.repeats),
        format!("n_eval={}", cfg.n_eval),
        "seed_derivation=splitmix64 chain over (master, repeat, stage, purpose) seeding ChaCha8".into(),
        "purposes=truth:1 sampling:2 evaluation:3 coverage:4; stage=grid index; truth and evaluation use stage 0".into(),
        "std_gap=sample standard deviation over repeats".into(),
    ]
}

/// Executes the `[sweep]` section and writes `raw.csv` and `summary.csv`.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutputFiles> {
    let cells = sweep_cells(cfg)?;
    let rows = run_cells(cfg, &cells)?;
    let summary = summarize(&rows);
    let (raw_path, w) = create(out_dir, "raw.csv")?;
    write_raw(w, &rows)?;
    let (summary_path, w) = create(out_dir, "summary.csv")?;
    write_summary(w, &summary_metadata(cfg), &summary)?;
    Ok(RunOutputFiles {
        raw_path,
        summary_path,
        rows,
        summary,
    })
}

/// Coverage coefficients of the configured instance (its first repeat's draw).
pub fn coverage_row(cfg: &ExperimentConfig) -> Result<CoverageRow> {
    let spec = cfg.coverage.clone().unwrap_or_default();
    let instance = cfg.instance.build(cfg.seed, 0)?;
    let cov_cfg = CoverageConfig {
        pool: spec.pool,
        seed: derive_seed(cfg.seed, 0, 0, Purpose::Coverage),
    };
    let report = coverage_coefficients(&instance, instance.model_class(), spec.eta, &cov_cfg)?;
    let (contexts, count_or_dim) = match cfg.instance.contexts {
        ContextKind::Finite => ("finite", cfg.instance.count.unwrap_or(0)),
        ContextKind::Sphere => ("sphere", cfg.instance.dim.unwrap_or(0)),
    };
    Ok(CoverageRow {
        contexts: contexts.to_string(),
        count_or_dim,
        actions: cfg.instance.actions,
        d2: report.d2,
        d2_centered: report.d2_centered,
        c_global: report.c_global,
        c_local_bound: report.c_local_bound,
        rho: report.rho,
        sampled: report.sampled,
        pool: if report.sampled { spec.pool } else { 0 },
    })
}

/// Writes `coverage.csv` with one row for the configured instance.
pub fn cmd_coverage(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(PathBuf, CoverageRow)> {
    let row = coverage_row(cfg)?;
    let (path, w) = create(out_dir, "coverage.csv")?;
    write_coverage(w, std::slice::from_ref(&row))?;
    Ok((path, row))
}

/// Panel a compares two-stage sampling with the offline baseline at the
/// `[figures]` eta; panel b runs two-stage sampling for each eta of the
/// sweep. Both split a total `T` as `m = ceil(T/2)`, `n = T - m`.
pub fn figure_rows(cfg: &ExperimentConfig) -> Result<(Vec<FigureRow>, Vec<FigureRow>)> {
    let fig = cfg
        .figures
        .as_ref()
        .ok_or_else(|| Error::config("figures", "section missing"))?;
    let (mixed, offline) = match fig.feedback {
        Feedback::Reward => (Algorithm::Tmps, Algorithm::Offline),
        Feedback::Preference => (Algorithm::TmpsPf, Algorithm::OfflinePf),
    };
    let point = |algorithm, eta, i: usize, total| {
        let (m, n) = even_split(total);
        Cell {
            algorithm,
            eta,
            m,
            n,
            stage: i as u64,
        }
    };
    let mut a = Vec::new();
    for (i, &t) in fig.totals.iter().enumerate() {
        a.push(point(mixed, fig.eta, i, t));
        a.push(point(offline, fig.eta, i, t));
    }
    let mut b = Vec::new();
    for &eta in &fig.eta_sweep {
        for (i, &t) in fig.totals.iter().enumerate() {
            b.push(point(mixed, eta, i, t));
        }
    }
    Ok((panel(cfg, "a", &a)?, panel(cfg, "b", &b)?))
}

fn panel(cfg: &ExperimentConfig, name: &str, cells: &[Cell]) -> Result<Vec<FigureRow>> {
    let rows = run_cells(cfg, cells)?;
    Ok(cells
        .iter()
        .zip(rows.chunks(cfg.repeats))
        .map(|(cell, runs)| {
            let gaps: Vec<f64> = runs.iter().map(|r| r.gap).collect();
            let (mean, std) = mean_std(&gaps);
            FigureRow {
                panel: name.to_string(),
                algorithm: cell.algorithm,
                feedback: cell.algorithm.feedback(),
                eta: cell.eta,
                total: cell.total(),
                m: cell.m,
                n: cell.n,
                repeats: cfg.repeats,
                mean_gap: mean,
                std_gap: std,
            }
        })
        .collect())
}

/// Writes `fig_{r,p}_a.csv` and `fig_{r,p}_b.csv`.
pub fn cmd_figures(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let (a, b) = figure_rows(cfg)?;
    let tag = match cfg.figures.as_ref().map(|f| f.feedback) {
        Some(Feedback::Preference) => "p",
        _ => "r",
    };
    let (pa, w) = create(out_dir, &format!("fig_{tag}_a.csv"))?;
    write_figure(w, &a)?;
    let (pb, w) = create(out_dir, &format!("fig_{tag}_b.csv"))?;
    write_figure(w, &b)?;
    Ok((pa, pb))
}
