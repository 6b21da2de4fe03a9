use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vortexnoise::acceptance::{self, AcceptanceOptions, CriterionReport};
use vortexnoise::basis::WaveVector;
use vortexnoise::error::Error;
use vortexnoise::experiment::{
    compare_autocovariance, run_records, summarize, write_outputs, EnsembleSummary, ExperimentConfig, System,
};
use vortexnoise::wick::{self, RPath, SymmetricKernelSpec};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "vortexnoise", version, about = "Point vortices with transport noise and their Galerkin limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the exact basis, kernel and quadrature identities.
    Identities {
        /// Print every check, not only the summary lines.
        #[arg(long)]
        verbose: bool,
    },
    /// Run a point-vortex ensemble.
    Simulate(RunArgs),
    /// Run a Galerkin ensemble.
    Galerkin(RunArgs),
    /// Exact Gaussian moments from the Wick expansion.
    Moments(MomentArgs),
    /// Compare lag autocovariances of two ensemble summaries.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Lags to compare; defaults to the lags of the first summary.
        #[arg(long, value_delimiter = ',')]
        lags: Vec<f64>,
        #[arg(long, default_value_t = 3.0)]
        se_multiple: f64,
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
    },
    /// Run the acceptance criteria.
    Accept {
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Multiplies every ensemble size (1.0 runs the full suite).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config, or a summary.json whose embedded config is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct MomentArgs {
    /// Number of vortices N.
    #[arg(long)]
    vortices: usize,
    /// Noise cutoff n for R.
    #[arg(long, default_value_t = 4)]
    cutoff: u32,
    #[arg(long, default_value = "1,0")]
    l: WaveVector,
    #[arg(long, default_value = "0,1")]
    m: WaveVector,
    /// Evaluate R by full enumeration instead of the decomposed sums.
    #[arg(long)]
    generic: bool,
    /// Term budget for the enumeration.
    #[arg(long)]
    budget: Option<usize>,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::NonFinite(_) | Error::Collision { .. } | Error::BudgetExceeded { .. } => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_for(&e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Identities { verbose } => {
            let opts = AcceptanceOptions::default();
            let reports: Vec<CriterionReport> = [1, 2, 3]
                .iter()
                .map(|&id| acceptance::run_criterion(id, &opts))
                .collect();
            Ok(report(&reports, verbose))
        }
        Command::Simulate(a) => simulate(a, System::Particles),
        Command::Galerkin(a) => simulate(a, System::Galerkin),
        Command::Moments(a) => moments(a),
        Command::Compare {
            a,
            b,
            lags,
            se_multiple,
            tolerance,
        } => compare(&a, &b, lags, se_multiple, tolerance),
        Command::Accept {
            only,
            scale,
            seed,
            json,
            verbose,
        } => accept(only, scale, seed, json, verbose),
    };
    r.unwrap_or_else(fail)
}

fn report(reports: &[CriterionReport], verbose: bool) -> ExitCode {
    for r in reports {
        if verbose || !r.pass {
            print!("{r}");
        } else {
            println!("{}", r.summary_line());
        }
    }
    if reports.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn simulate(a: RunArgs, system: System) -> Result<ExitCode, Error> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.system = system;
    cfg.master_seed = a.seed;
    if let Some(r) = a.runs {
        cfg.ensemble_size = r;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let dir = a
        .output
        .or_else(|| cfg.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.experiment));
    let records = run_records(&cfg)?;
    let summary = summarize(&cfg, &records);
    write_outputs(&dir, &summary, &records)?;
    println!(
        "{} runs ({} used, {} near collisions, {} failed), config {} seed {} -> {}",
        summary.ensemble_size,
        summary.used_runs,
        summary.degenerate_runs,
        summary.failed_runs,
        &summary.config_hash[..12],
        summary.master_seed,
        dir.display()
    );
    for o in &summary.observables {
        if let Some(t) = o.times.last() {
            println!("  {} at t = {}: mean {:+.5} +- {:.5}, E[x^2] {:.5}", o.name, t.t, t.mean, t.se, t.second_moment);
        }
    }
    if summary.failed_runs > 0 {
        eprintln!("error: {} runs produced non-finite values", summary.failed_runs);
        return Ok(ExitCode::from(EXIT_NUMERIC));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct MomentReport {
    vortices: usize,
    cutoff: u32,
    l: String,
    m: String,
    mean_r: f64,
    second_moment_r: f64,
    constant_kernel: f64,
    rank_one_l: f64,
}

fn moments(a: MomentArgs) -> Result<ExitCode, Error> {
    let path = if a.generic { RPath::Generic } else { RPath::Decomposed };
    let budget = a.budget.unwrap_or_else(wick::default_budget);
    let r = MomentReport {
        vortices: a.vortices,
        cutoff: a.cutoff,
        l: a.l.to_string(),
        m: a.m.to_string(),
        mean_r: wick::exact_r_mean(a.l, a.m, a.cutoff, a.vortices)?,
        second_moment_r: wick::exact_r_second_moment_with(a.l, a.m, a.cutoff, a.vortices, budget, path)?,
        constant_kernel: wick::exact_second_moment(&SymmetricKernelSpec::constant(1.0), a.vortices)?,
        rank_one_l: wick::exact_second_moment(&SymmetricKernelSpec::rank_one(a.l), a.vortices)?,
    };
    println!("{}", serde_json::to_string_pretty(&r).map_err(|e| Error::Parse(e.to_string()))?);
    Ok(ExitCode::SUCCESS)
}

fn load_summary(p: &Path) -> Result<EnsembleSummary, Error> {
    let text = std::fs::read_to_string(p)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
}

fn compare(a: &Path, b: &Path, lags: Vec<f64>, k: f64, tol: f64) -> Result<ExitCode, Error> {
    let sa = load_summary(a)?;
    let sb = load_summary(b)?;
    let lags = if lags.is_empty() { sa.config.lags.clone() } else { lags };
    if lags.is_empty() {
        return Err(Error::invalid("lags", "no lags given and none recorded in the first summary"));
    }
    let rep = compare_autocovariance(&sa, &sb, &lags, k, tol)?;
    println!("observable,lag,a,b,difference,combined_se,pass");
    for r in &rep.rows {
        println!(
            "{},{},{},{},{},{},{}",
            r.observable, r.lag, r.a, r.b, r.difference, r.combined_se, r.pass
        );
    }
    Ok(if rep.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}

fn accept(only: Vec<u8>, scale: f64, seed: Option<u64>, json: Option<PathBuf>, verbose: bool) -> Result<ExitCode, Error> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("scale", "must be positive"));
    }
    let mut opts = AcceptanceOptions {
        scale,
        ..AcceptanceOptions::default()
    };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let ids: Vec<u8> = if only.is_empty() {
        acceptance::CRITERIA.to_vec()
    } else {
        only
    };
    if let Some(bad) = ids.iter().find(|i| !acceptance::CRITERIA.contains(i)) {
        return Err(Error::invalid("only", format!("no criterion {bad}")));
    }
    let mut reports = Vec::new();
    for id in ids {
        let r = acceptance::run_criterion(id, &opts);
        if verbose || !r.pass {
            print!("{r}");
        } else {
            println!("{}", r.summary_line());
        }
        reports.push(r);
    }
    if let Some(p) = json {
        let text = serde_json::to_string_pretty(&reports).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(p, text)?;
    }
    Ok(if reports.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}
