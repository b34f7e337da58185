//! `recourse-lab`: run invalidation experiments, sweeps and bound checks
//! from the command line.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage or
//! configuration errors.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use recourse_lab::dataset::{synth_base, synth_ordinal, Scenario};
use recourse_lab::models::{train, ModelSpec};
use recourse_lab::shiftlab::{
    run_pipeline_with, sensitivity_sweep, DataSource, ExperimentConfig, InvalidationReport,
    SweepPoint,
};
use recourse_lab::theory::{verify_bound, BoundInput, BoundKind};
use recourse_lab::Error;

use output::{Manifest, Outputs};

const SEED_OVERRIDE: &str = "RECOURSE_LAB_SEED_OVERRIDE";

#[derive(Parser)]
#[command(
    name = "recourse-lab",
    version,
    about = "Recourse invalidation experiments"
)]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train M1 and M2, generate recourses against M1, count what M2 rejects.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Repeat the run with D2 shifted by each alpha.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "target_shift")]
        scenario: Scenario,
        /// Comma-separated shift magnitudes.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        alphas: Vec<f64>,
    },
    /// Print the closed-form invalidation probability.
    Bounds {
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, default_value = "continuous")]
        kind: BoundKind,
        /// Also estimate it by simulation on a built-in synthetic setup.
        #[arg(long)]
        verify: bool,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) | Error::Argument(_) | Error::Json(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Sweep {
            config,
            out,
            scenario,
            alphas,
        } => cmd_sweep(&config, &out, scenario, &alphas),
        Command::Bounds {
            rho,
            delta,
            kind,
            verify,
        } => cmd_bounds(rho, delta, kind, verify),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Ok(raw) = std::env::var(SEED_OVERRIDE) {
        let seed: u64 = raw.trim().parse().map_err(|_| {
            Failure::usage(format!("{SEED_OVERRIDE} must be an integer, got `{raw}`"))
        })?;
        override_seeds(&mut cfg, seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn override_seeds(cfg: &mut ExperimentConfig, seed: u64) {
    cfg.seeds.data = seed;
    cfg.seeds.model = seed;
    cfg.seeds.recourse = seed;
    for src in [&mut cfg.d1, &mut cfg.d2] {
        if let DataSource::Synthetic(spec) = src {
            spec.seed = seed;
        }
    }
}

fn cmd_run(config: &Path, out: &Path) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = load_config(config)?;
    let run = run_pipeline_with(&cfg, |_, m2| m2)?;
    let mut files = Outputs::new(out)?;
    files.write("report.csv", |w| {
        InvalidationReport::write_csv(std::slice::from_ref(&run.report), w)
    })?;
    files.write_text("report.json", &run.report.to_json()?)?;
    files.write("cf1.csv", |w| run.cf1.write_csv(w))?;
    files.write_text("cf1_summary.json", &run.cf1.summary_json()?)?;
    Manifest::new(&cfg, files.paths(), start).write(&mut files)?;
    println!("{}", run.report.row().join(","));
    Ok(())
}

fn cmd_sweep(config: &Path, out: &Path, scenario: Scenario, alphas: &[f64]) -> Result<(), Failure> {
    let start = Instant::now();
    if alphas.is_empty() {
        return Err(Failure::usage("--alphas needs at least one value"));
    }
    let cfg = load_config(config)?;
    let points = sensitivity_sweep(scenario, alphas, &cfg)?;
    let mut files = Outputs::new(out)?;
    files.write("sweep.csv", |w| SweepPoint::write_csv(&points, w))?;
    Manifest::new(&cfg, files.paths(), start).write(&mut files)?;
    for p in &points {
        let pct = p
            .invalidation_pct
            .map_or("NAN".into(), |v| format!("{v:.2}"));
        println!("{},{pct},{}", p.alpha, p.cf1_size);
    }
    Ok(())
}

fn cmd_bounds(rho: f64, delta: f64, kind: BoundKind, verify: bool) -> Result<(), Failure> {
    let q = BoundInput::new(rho, delta, kind)?.bound()?;
    println!("{q:.5}");
    if verify {
        let data = match kind {
            BoundKind::Continuous => synth_base(10_000, 0)?,
            BoundKind::Ordinal => synth_ordinal(10_000, 3.0, 0)?,
        };
        let m1 = train(&ModelSpec::logistic_regression(), &data)?;
        let c = verify_bound(&m1, &data, rho, delta, 5000, 0)?;
        println!(
            "empirical {:.5} gap {:.5} n {}",
            c.empirical_q, c.abs_gap, c.n
        );
    }
    Ok(())
}
