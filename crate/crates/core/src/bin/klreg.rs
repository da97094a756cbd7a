use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use klreg::experiment::{
    cmd_coverage, cmd_figures, cmd_run, output_dir, run_verify, ExperimentConfig, Level,
};
use klreg::Error;

#[derive(Parser)]
#[command(name = "klreg", version, about = "KL-regularized bandit and preference-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to the config's `output`, then $KLREG_OUT, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write raw.csv and summary.csv.
    Run(Common),
    /// Run the invariant suites.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
    },
    /// Write coverage coefficients of the configured instance.
    Coverage(Common),
    /// Write the two figure CSVs for the configured feedback mode.
    Figures(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

fn load(common: &Common) -> klreg::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    let out = output_dir(common.out.as_deref(), &cfg);
    Ok((cfg, out))
}

fn run(cli: Cli) -> klreg::Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, out) = load(&common)?;
            let files = cmd_run(&cfg, &out)?;
            println!("{} rows -> {}", files.rows.len(), files.raw_path.display());
            println!("{} groups -> {}", files.summary.len(), files.summary_path.display());
        }
        Command::Coverage(common) => {
            let (cfg, out) = load(&common)?;
            let (path, row) = cmd_coverage(&cfg, &out)?;
            println!(
                "d2={} d2_centered={} c_global={} c_local_bound={} rho={}{}",
                row.d2,
                row.d2_centered,
                row.c_global,
                row.c_local_bound,
                row.rho,
                if row.sampled { " (sampled lower estimate)" } else { "" }
            );
            println!("-> {}", path.display());
        }
        Command::Figures(common) => {
            let (cfg, out) = load(&common)?;
            let (a, b) = cmd_figures(&cfg, &out)?;
            println!("-> {}\n-> {}", a.display(), b.display());
        }
        Command::Verify { level } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let report = run_verify(level);
            println!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
