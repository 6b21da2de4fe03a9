//! Experiment configuration, reproducible ensembles and their summaries.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{SpectralCutoff, WaveVector};
use crate::dynamics::{self, sample_initial, Integrator, NoiseConfig, Stepper, VortexState};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::galerkin::{GalerkinConfig, GalerkinSolver};
use crate::kernel::{Kernel, KernelConfig, KernelMode};
use crate::observables::{self, ModeTable};
use crate::rng::{self, Purpose};
use crate::stats::{self, batch_means_se, combined_se};

/// Number of contiguous run blocks used for batch-means errors.
pub const BATCHES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Particles,
    Galerkin,
}

/// A scalar recorded at every sample time.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `⟨ω, e_l⟩`.
    Mode(WaveVector),
    /// Truncated `H^{−s}` norm over `Λ_M`.
    Sobolev { s: f64, cutoff: u32 },
    /// `⟨ω⊗ω, H_{e_l}⟩` (particles only).
    Transport(WaveVector),
    /// `R_{l,m}` with the run's noise cutoff (particles only).
    RStatistic(WaveVector, WaveVector),
    /// `⟨ω, 1⟩`.
    Circulation,
    /// Minimum pair distance (particles only).
    MinDistance,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Mode(l) => write!(f, "mode({},{})", l.k1, l.k2),
            Observable::Sobolev { s, cutoff } => write!(f, "sobolev({s},{cutoff})"),
            Observable::Transport(l) => write!(f, "h({},{})", l.k1, l.k2),
            Observable::RStatistic(l, m) => write!(f, "r({},{};{},{})", l.k1, l.k2, m.k1, m.k2),
            Observable::Circulation => write!(f, "circulation"),
            Observable::MinDistance => write!(f, "min_distance"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unknown observable `{s}`"));
        match s {
            "circulation" => return Ok(Observable::Circulation),
            "min_distance" => return Ok(Observable::MinDistance),
            _ => {}
        }
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = &s[..open];
        let args = &s[open + 1..s.len() - 1];
        let wv = |a: &str| a.parse::<WaveVector>();
        match name {
            "mode" => Ok(Observable::Mode(wv(args)?)),
            "h" => Ok(Observable::Transport(wv(args)?)),
            "r" => {
                let (a, b) = args.split_once(';').ok_or_else(bad)?;
                Ok(Observable::RStatistic(wv(a)?, wv(b)?))
            }
            "sobolev" => {
                let (a, b) = args.split_once(',').ok_or_else(bad)?;
                let s = a.trim().parse().map_err(|_| bad())?;
                let cutoff = b.trim().parse().map_err(|_| bad())?;
                Ok(Observable::Sobolev { s, cutoff })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_integrator() -> Integrator {
    Integrator::EulerMaruyama
}

fn default_true() -> bool {
    true
}

/// Flat experiment description; serialises to and from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub system: System,
    pub vortex_count: usize,
    pub noise_cutoff: u32,
    pub galerkin_cutoff: u32,
    /// Fourier cutoff of the interaction kernel; `0` selects the exact kernel.
    pub fourier_cutoff: u32,
    /// Side of the kernel interpolation table; `0` disables it.
    pub kernel_grid: usize,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    pub dt: f64,
    pub t_final: f64,
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub lags: Vec<f64>,
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub observables: Vec<Observable>,
    /// Galerkin nonlinearity switch.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Worker threads; `0` uses the global pool. Results do not depend on it.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub output: Option<String>,
    /// Run whose positions are dumped at every sample time.
    #[serde(default)]
    pub trajectory_run: Option<u64>,
    /// Number of leading runs whose observable series are written out.
    #[serde(default)]
    pub series_runs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "experiment".into(),
            system: System::Particles,
            vortex_count: 64,
            noise_cutoff: 8,
            galerkin_cutoff: 5,
            fourier_cutoff: 0,
            kernel_grid: 256,
            integrator: Integrator::EulerMaruyama,
            dt: 1e-3,
            t_final: 0.5,
            sample_times: vec![0.0, 0.25, 0.5],
            lags: Vec::new(),
            ensemble_size: 100,
            master_seed: 0,
            observables: vec![Observable::Mode(WaveVector::of(1, 0))],
            nonlinear: true,
            workers: 0,
            output: None,
            trajectory_run: None,
            series_runs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let s: EnsembleSummary =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            s.config.validate()?;
            return Ok(s.config);
        }
        Self::from_toml(&text)
    }

    pub fn kernel_config(&self) -> KernelConfig {
        KernelConfig {
            mode: if self.fourier_cutoff == 0 {
                KernelMode::Exact
            } else {
                KernelMode::Truncated(self.fourier_cutoff)
            },
            grid_resolution: (self.kernel_grid > 0).then_some(self.kernel_grid),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(field, "must be positive and finite"))
            }
        };
        if self.experiment.trim().is_empty() {
            return Err(Error::invalid("experiment", "name must not be empty"));
        }
        if self.vortex_count == 0 {
            return Err(Error::invalid("vortex_count", "must be at least 1"));
        }
        if self.noise_cutoff == 0 {
            return Err(Error::invalid("noise_cutoff", "must be at least 1"));
        }
        if self.galerkin_cutoff == 0 {
            return Err(Error::invalid("galerkin_cutoff", "must be at least 1"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble_size", "must be at least 1"));
        }
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::invalid("master_seed", "must be below 2^63"));
        }
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        if self.sample_times.is_empty() {
            return Err(Error::invalid("sample_times", "need at least one sample time"));
        }
        for &t in &self.sample_times {
            if !(0.0..=self.t_final * (1.0 + 1e-12)).contains(&t) {
                return Err(Error::invalid("sample_times", format!("{t} lies outside [0, t_final]")));
            }
            step_index(t, self.dt).ok_or_else(|| {
                Error::invalid("sample_times", format!("{t} is not a multiple of dt"))
            })?;
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sample_times", "must be strictly increasing"));
        }
        for &lag in &self.lags {
            positive("lags", lag)?;
        }
        if self.observables.is_empty() {
            return Err(Error::invalid("observables", "need at least one observable"));
        }
        for o in &self.observables {
            match (self.system, o) {
                (System::Galerkin, Observable::Transport(_) | Observable::RStatistic(..) | Observable::MinDistance) => {
                    return Err(Error::invalid("observables", format!("{o} needs particles")));
                }
                (_, Observable::Sobolev { s, cutoff }) if !(*s > 0.0) || *cutoff == 0 => {
                    return Err(Error::invalid("observables", format!("{o} needs s > 0 and M >= 1")));
                }
                (_, Observable::Mode(l)) | (_, Observable::Transport(l)) if l.norm_sq() == 0 => {
                    return Err(Error::invalid("observables", "mode must be nonzero"));
                }
                (System::Galerkin, Observable::Mode(l))
                    if l.norm_sq() > (self.galerkin_cutoff as i64).pow(2) =>
                {
                    return Err(Error::invalid(
                        "observables",
                        format!("{o} lies outside galerkin_cutoff {}", self.galerkin_cutoff),
                    ));
                }
                _ => {}
            }
        }
        if self.system == System::Particles {
            self.kernel_config().validate()?;
        } else {
            GalerkinConfig {
                cutoff: self.galerkin_cutoff,
                dt: self.dt,
                seed: self.master_seed,
                nonlinear: self.nonlinear,
            }
            .validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the settings that determine results (not `workers`,
    /// `output`, `trajectory_run` or `series_runs`).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.output = None;
        c.trajectory_run = None;
        c.series_runs = 0;
        let text = toml::to_string(&c).unwrap_or_default();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// `t/dt` when it is an integer up to rounding.
fn step_index(t: f64, dt: f64) -> Option<u64> {
    let r = t / dt;
    let i = r.round();
    ((r - i).abs() <= 1e-6 * r.abs().max(1.0)).then_some(i as u64)
}

/// Per-run output: `values[observable][sample]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run: u64,
    pub values: Vec<Vec<f64>>,
    pub degenerate: bool,
    pub failed: bool,
    pub steps: u64,
    pub near_collision_steps: u64,
    pub trajectory: Option<String>,
}

struct Probe {
    table: Option<ModeTable>,
}

fn particle_values(
    cfg: &ExperimentConfig,
    kernel: &Kernel,
    probe: &Probe,
    state: &VortexState,
) -> Vec<f64> {
    let scale = 1.0 / (state.len() as f64).sqrt();
    let modes = probe.table.as_ref().map(|t| {
        let mut acc = vec![0.0; t.modes().len()];
        let mut buf = vec![0.0; t.modes().len()];
        for (xi, x) in state.intensities().iter().zip(state.positions()) {
            t.eval_into(*x, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += xi * b;
            }
        }
        acc.iter().map(|a| a * scale).collect::<Vec<f64>>()
    });
    cfg.observables
        .iter()
        .map(|o| match o {
            Observable::Mode(l) => {
                let t = probe.table.as_ref().unwrap();
                let i = t.modes().iter().position(|k| k == l).unwrap();
                modes.as_ref().unwrap()[i]
            }
            Observable::Sobolev { s, cutoff } => observables::spectral_coeffs(state, *cutoff)
                .and_then(|f| observables::sobolev_norm(&f, *s))
                .unwrap_or(f64::NAN),
            Observable::Transport(l) => observables::quadratic_form(kernel, state, *l),
            Observable::RStatistic(l, m) => {
                observables::r_statistic(state, *l, *m, cfg.noise_cutoff).unwrap_or(f64::NAN)
            }
            Observable::Circulation => state.total_circulation(),
            Observable::MinDistance => dynamics::min_pair_distance(state).unwrap_or(f64::INFINITY),
        })
        .collect()
}

fn galerkin_values(cfg: &ExperimentConfig, field: &SpectralField) -> Vec<f64> {
    cfg.observables
        .iter()
        .map(|o| match o {
            Observable::Mode(l) => field.get(*l).unwrap_or(f64::NAN),
            Observable::Sobolev { s, cutoff } => {
                let w: f64 = field
                    .iter()
                    .filter(|(l, _)| l.norm_sq() <= (*cutoff as i64).pow(2))
                    .map(|(l, c)| (1.0 + l.norm_sq() as f64).powf(-s) * c * c)
                    .sum();
                w.sqrt()
            }
            Observable::Circulation => 0.0,
            _ => f64::NAN,
        })
        .collect()
}

fn transpose_push(values: &mut [Vec<f64>], sample: Vec<f64>) {
    for (v, s) in values.iter_mut().zip(sample) {
        v.push(s);
    }
}

/// Executes run `run` of the experiment.
pub fn run_single(cfg: &ExperimentConfig, kernel: Option<&Kernel>, run: u64) -> Result<RunRecord> {
    let schedule: Vec<u64> = cfg
        .sample_times
        .iter()
        .map(|&t| step_index(t, cfg.dt).unwrap())
        .collect();
    let last = *schedule.last().unwrap();
    let mut values = vec![Vec::with_capacity(schedule.len()); cfg.observables.len()];
    let mut rec = RunRecord {
        run,
        values: Vec::new(),
        degenerate: false,
        failed: false,
        steps: last,
        near_collision_steps: 0,
        trajectory: None,
    };
    match cfg.system {
        System::Particles => {
            let owned;
            let kernel = match kernel {
                Some(k) => k,
                None => {
                    owned = Kernel::new(cfg.kernel_config())?;
                    &owned
                }
            };
            let modes: Vec<WaveVector> = cfg
                .observables
                .iter()
                .filter_map(|o| match o {
                    Observable::Mode(l) => Some(*l),
                    _ => None,
                })
                .collect();
            let probe = Probe {
                table: (!modes.is_empty()).then(|| ModeTable::new(modes)),
            };
            let mut init = rng::stream(cfg.master_seed, run, Purpose::ParticleInit, 0);
            let mut state = sample_initial(cfg.vortex_count, &mut init)?;
            let noise = NoiseConfig::new(SpectralCutoff::new(cfg.noise_cutoff)?, cfg.master_seed, cfg.dt)?;
            let mut stepper = Stepper::new(kernel, noise, cfg.integrator, run);
            let dump = cfg.trajectory_run == Some(run);
            let mut traj = Vec::new();
            if dump {
                dynamics::write_trajectory_header(&mut traj)?;
            }
            let mut next = 0;
            for step in 0..=last {
                if step > 0 {
                    let d = stepper.advance(&mut state);
                    if d.near_collision {
                        rec.degenerate = true;
                        rec.near_collision_steps += 1;
                    }
                    if state.positions().iter().flatten().any(|v| !v.is_finite()) {
                        rec.failed = true;
                        break;
                    }
                }
                while next < schedule.len() && schedule[next] == step {
                    let v = particle_values(cfg, kernel, &probe, &state);
                    if v.iter().any(|x| x.is_nan()) {
                        rec.failed = true;
                    }
                    transpose_push(&mut values, v);
                    if dump {
                        dynamics::write_trajectory_rows(&mut traj, &state)?;
                    }
                    next += 1;
                }
            }
            if dump {
                rec.trajectory = Some(String::from_utf8_lossy(&traj).into_owned());
            }
        }
        System::Galerkin => {
            let gcfg = GalerkinConfig {
                cutoff: cfg.galerkin_cutoff,
                dt: cfg.dt,
                seed: cfg.master_seed,
                nonlinear: cfg.nonlinear,
            };
            let mut solver = GalerkinSolver::new(gcfg, run)?;
            let mut field = solver.initial_field()?;
            let mut next = 0;
            for step in 0..=last {
                if step > 0 && solver.advance(&mut field).is_err() {
                    rec.failed = true;
                    break;
                }
                while next < schedule.len() && schedule[next] == step {
                    transpose_push(&mut values, galerkin_values(cfg, &field));
                    next += 1;
                }
            }
        }
    }
    rec.values = values;
    Ok(rec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub t: f64,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// `E[X²]`, the variance about the known mean zero.
    pub second_moment: f64,
    pub fourth_moment: f64,
    /// Batch-means standard error of the mean.
    pub se: f64,
    /// Standard error of the mean treating runs as independent.
    pub se_iid: f64,
    /// Standard error of `second_moment`.
    pub second_moment_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagStats {
    pub lag: f64,
    /// Time-averaged `E[(X_t − μ)(X_{t+lag} − μ)]`.
    pub value: f64,
    /// Batch-means standard error over runs.
    pub se: f64,
    /// Sample pairs per run.
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSummary {
    pub name: String,
    pub times: Vec<TimeStats>,
    pub autocovariance: Vec<LagStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub experiment: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub ensemble_size: usize,
    pub used_runs: usize,
    pub degenerate_runs: usize,
    pub failed_runs: usize,
    /// Fraction of all steps that ended below the near-collision threshold.
    pub near_collision_fraction: f64,
    pub observables: Vec<ObservableSummary>,
    pub config: ExperimentConfig,
}

impl EnsembleSummary {
    pub fn observable(&self, name: &str) -> Option<&ObservableSummary> {
        self.observables.iter().find(|o| o.name == name)
    }
}

/// Runs every member of the ensemble. The result depends only on the config.
pub fn run_records(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let kernel = match cfg.system {
        System::Particles => Some(Kernel::new(cfg.kernel_config())?),
        System::Galerkin => None,
    };
    let work = || -> Result<Vec<RunRecord>> {
        (0..cfg.ensemble_size as u64)
            .into_par_iter()
            .map(|r| run_single(cfg, kernel.as_ref(), r))
            .collect()
    };
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(work)
    } else {
        work()
    }
}

/// Reduces run records (in run order) to a summary.
pub fn summarize(cfg: &ExperimentConfig, records: &[RunRecord]) -> EnsembleSummary {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.run);
    let used: Vec<&RunRecord> = sorted.iter().copied().filter(|r| !r.failed && !r.degenerate).collect();
    let total_steps: u64 = sorted.iter().map(|r| r.steps).sum();
    let near: u64 = sorted.iter().map(|r| r.near_collision_steps).sum();
    let lag_pairs: Vec<Vec<(usize, usize)>> = cfg
        .lags
        .iter()
        .map(|&lag| {
            let mut v = Vec::new();
            for (i, &a) in cfg.sample_times.iter().enumerate() {
                for (j, &b) in cfg.sample_times.iter().enumerate().skip(i) {
                    if ((b - a) - lag).abs() <= 1e-9 * lag.max(1.0) {
                        v.push((i, j));
                    }
                }
            }
            v
        })
        .collect();
    let observables = cfg
        .observables
        .iter()
        .enumerate()
        .map(|(o, obs)| {
            let times = cfg
                .sample_times
                .iter()
                .enumerate()
                .map(|(s, &t)| {
                    let xs: Vec<f64> = used.iter().map(|r| r.values[o][s]).collect();
                    let sq = stats::second_moment(&xs);
                    TimeStats {
                        t,
                        count: xs.len(),
                        mean: stats::mean(&xs),
                        variance: stats::variance(&xs),
                        second_moment: sq.mean,
                        fourth_moment: stats::mean(&xs.iter().map(|x| x.powi(4)).collect::<Vec<_>>()),
                        se: batch_means_se(&xs, BATCHES),
                        se_iid: stats::standard_error(&xs),
                        second_moment_se: sq.se,
                    }
                })
                .collect();
            let grand: Vec<f64> = used.iter().flat_map(|r| r.values[o].iter().copied()).collect();
            let mu = stats::mean(&grand);
            let autocovariance = cfg
                .lags
                .iter()
                .zip(&lag_pairs)
                .map(|(&lag, pairs)| {
                    let per_run: Vec<f64> = used
                        .iter()
                        .map(|r| {
                            let v = &r.values[o];
                            pairs.iter().map(|&(i, j)| (v[i] - mu) * (v[j] - mu)).sum::<f64>()
                                / pairs.len().max(1) as f64
                        })
                        .collect();
                    LagStats {
                        lag,
                        value: if pairs.is_empty() { f64::NAN } else { stats::mean(&per_run) },
                        se: batch_means_se(&per_run, BATCHES),
                        pairs: pairs.len(),
                    }
                })
                .collect();
            ObservableSummary {
                name: obs.to_string(),
                times,
                autocovariance,
            }
        })
        .collect();
    EnsembleSummary {
        experiment: cfg.experiment.clone(),
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        ensemble_size: cfg.ensemble_size,
        used_runs: used.len(),
        degenerate_runs: sorted.iter().filter(|r| r.degenerate && !r.failed).count(),
        failed_runs: sorted.iter().filter(|r| r.failed).count(),
        near_collision_fraction: if total_steps == 0 { 0.0 } else { near as f64 / total_steps as f64 },
        observables,
        config: cfg.clone(),
    }
}

pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleSummary> {
    let records = run_records(cfg)?;
    Ok(summarize(cfg, &records))
}

/// Writes `summary.json`, `means.csv` and the optional per-run files into
/// `dir`.
pub fn write_outputs(dir: &Path, summary: &EnsembleSummary, records: &[RunRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.join("summary.json"), json)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("means.csv"))?);
    observables::write_observable_header(&mut w)?;
    for o in &summary.observables {
        for t in &o.times {
            observables::write_observable_row(&mut w, t.t, &o.name, t.mean)?;
        }
    }
    w.flush()?;
    let cfg = &summary.config;
    for r in records.iter().filter(|r| (r.run as usize) < cfg.series_runs) {
        let mut w = BufWriter::new(fs::File::create(dir.join(format!("run_{:05}.csv", r.run)))?);
        observables::write_observable_header(&mut w)?;
        for (o, obs) in cfg.observables.iter().enumerate() {
            for (s, t) in cfg.sample_times.iter().enumerate() {
                if let Some(v) = r.values.get(o).and_then(|v| v.get(s)) {
                    observables::write_observable_row(&mut w, *t, &obs.to_string(), *v)?;
                }
            }
        }
        w.flush()?;
    }
    for r in records {
        if let Some(traj) = &r.trajectory {
            fs::write(dir.join("trajectory.csv"), traj)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagComparison {
    pub observable: String,
    pub lag: f64,
    pub a: f64,
    pub b: f64,
    pub difference: f64,
    pub combined_se: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub se_multiple: f64,
    pub absolute_tolerance: f64,
    pub rows: Vec<LagComparison>,
    pub pass: bool,
}

/// Compares stationary autocovariances lag by lag. A row passes when the
/// difference is within `se_multiple` combined standard errors or below
/// `absolute_tolerance`, whichever is looser.
pub fn compare_autocovariance(
    a: &EnsembleSummary,
    b: &EnsembleSummary,
    lags: &[f64],
    se_multiple: f64,
    absolute_tolerance: f64,
) -> Result<ComparisonReport> {
    let names_a: Vec<&str> = a.observables.iter().map(|o| o.name.as_str()).collect();
    let names_b: Vec<&str> = b.observables.iter().map(|o| o.name.as_str()).collect();
    if names_a != names_b {
        return Err(Error::Mismatch(format!("observables {names_a:?} vs {names_b:?}")));
    }
    let find = |o: &ObservableSummary, lag: f64| -> Result<LagStats> {
        o.autocovariance
            .iter()
            .find(|s| (s.lag - lag).abs() <= 1e-12 * lag.max(1.0))
            .cloned()
            .ok_or_else(|| Error::Mismatch(format!("lag {lag} missing for {}", o.name)))
    };
    let mut rows = Vec::new();
    for (oa, ob) in a.observables.iter().zip(&b.observables) {
        for &lag in lags {
            let sa = find(oa, lag)?;
            let sb = find(ob, lag)?;
            let difference = sa.value - sb.value;
            let se = combined_se(sa.se, sb.se);
            let pass = difference.abs() <= se_multiple * se || difference.abs() < absolute_tolerance;
            rows.push(LagComparison {
                observable: oa.name.clone(),
                lag,
                a: sa.value,
                b: sb.value,
                difference,
                combined_se: se,
                pass,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ComparisonReport {
        se_multiple,
        absolute_tolerance,
        rows,
        pass,
    })
}

/// Evenly spaced sample times `0, every, 2·every, …, t_final`.
pub fn sample_grid(t_final: f64, every: f64) -> Vec<f64> {
    let n = (t_final / every).round() as usize;
    (0..=n).map(|i| i as f64 * every).collect()
}
