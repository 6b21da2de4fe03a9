//! Stochastic point-vortex system with common transport noise.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{SpectralCutoff, WaveVector};
use crate::error::{Error, Result};
use crate::kernel::{powers_into, Kernel};
use crate::rng::{self, Purpose};
use crate::torus::{displacement, wrap, Point};

/// Torus distance below which a step is flagged as a near collision.
pub const COLLISION_THRESHOLD: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct VortexState {
    intensities: Vec<f64>,
    positions: Vec<Point>,
    time: f64,
    /// Accumulated displacement of each vortex without wrapping.
    travel: Vec<Point>,
}

impl VortexState {
    pub fn new(intensities: Vec<f64>, positions: Vec<Point>) -> Result<Self> {
        if intensities.is_empty() {
            return Err(Error::invalid("n_vortices", "need at least one vortex"));
        }
        if intensities.len() != positions.len() {
            return Err(Error::Mismatch(format!(
                "{} intensities for {} positions",
                intensities.len(),
                positions.len()
            )));
        }
        if intensities.iter().chain(positions.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vortex state".into()));
        }
        let n = positions.len();
        Ok(Self {
            intensities,
            positions: positions.into_iter().map(wrap).collect(),
            time: 0.0,
            travel: vec![[0.0; 2]; n],
        })
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn travel(&self) -> &[Point] {
        &self.travel
    }

    /// `⟨ω^N, 1⟩ = N^{-1/2} Σ ξ_i`.
    pub fn total_circulation(&self) -> f64 {
        self.intensities.iter().sum::<f64>() / (self.len() as f64).sqrt()
    }
}

/// Standard-normal intensities and uniform positions, intensities first.
pub fn sample_initial<R: Rng + ?Sized>(n_vortices: usize, rng: &mut R) -> Result<VortexState> {
    if n_vortices == 0 {
        return Err(Error::invalid("n_vortices", "need at least one vortex"));
    }
    let xi: Vec<f64> = (0..n_vortices).map(|_| StandardNormal.sample(rng)).collect();
    let pos: Vec<Point> = (0..n_vortices)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    VortexState::new(xi, pos)
}

/// Minimum torus distance over all pairs.
pub fn min_pair_distance(state: &VortexState) -> Result<f64> {
    if state.len() < 2 {
        return Err(Error::invalid("n_vortices", "pair distance needs N >= 2"));
    }
    Ok(closest_pair(state.positions()).0)
}

fn closest_pair(pos: &[Point]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let d = displacement(pos[i], pos[j]);
            let d2 = d[0] * d[0] + d[1] * d[1];
            if d2 < best.0 {
                best = (d2, i, j);
            }
        }
    }
    (best.0.sqrt(), best.1, best.2)
}

/// Fills `out` with `b_i = N^{-1/2} Σ_{j≠i} ξ_j K(X_i − X_j)`. Coincident
/// points contribute nothing.
fn drift_into(kernel: &Kernel, xi: &[f64], pos: &[Point], out: &mut [[f64; 2]]) {
    let n = xi.len();
    let scale = 1.0 / (n as f64).sqrt();
    out.iter_mut().for_each(|b| *b = [0.0, 0.0]);
    for i in 0..n {
        for j in i + 1..n {
            let k = kernel.eval(displacement(pos[i], pos[j]));
            out[i][0] += xi[j] * k[0];
            out[i][1] += xi[j] * k[1];
            out[j][0] -= xi[i] * k[0];
            out[j][1] -= xi[i] * k[1];
        }
    }
    for b in out.iter_mut() {
        b[0] *= scale;
        b[1] *= scale;
    }
}

/// Interaction drift of every vortex.
pub fn interaction_drift(kernel: &Kernel, state: &VortexState) -> Result<Vec<[f64; 2]>> {
    let pos = state.positions();
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i] == pos[j] {
                return Err(Error::Collision { i, j, distance: 0.0 });
            }
        }
    }
    let mut out = vec![[0.0; 2]; state.len()];
    drift_into(kernel, state.intensities(), pos, &mut out);
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    EulerMaruyama,
    Heun,
}

#[derive(Clone, Debug)]
pub struct NoiseConfig {
    pub cutoff: SpectralCutoff,
    pub master_seed: u64,
    pub dt: f64,
    /// Multiplies the noise; `0` gives the deterministic point-vortex flow.
    pub amplitude: f64,
}

impl NoiseConfig {
    pub fn new(cutoff: SpectralCutoff, master_seed: u64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "time step must be positive"));
        }
        Ok(Self {
            cutoff,
            master_seed,
            dt,
            amplitude: 1.0,
        })
    }

    pub fn without_noise(mut self) -> Self {
        self.amplitude = 0.0;
        self
    }

    /// The increments `ΔW^k`, `k ∈ Λ_n` in lexicographic order, for one step
    /// of one run. They depend only on `(master_seed, run, step, k)`.
    pub fn increments(&self, run: u64, step: u64) -> Vec<f64> {
        let mut r = rng::stream(self.master_seed, run, Purpose::TransportNoise, step);
        rng::gaussian_per_mode(&mut r, &self.cutoff, &self.cutoff.shell_order(), self.dt)
    }
}

/// One positive wave vector and the indices of `±k` in the increment vector.
#[derive(Clone, Copy, Debug)]
struct NoiseMode {
    k: WaveVector,
    coef: [f64; 2],
    plus: usize,
    minus: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub min_distance: f64,
    pub near_collision: bool,
}

/// Advances vortex states by one time step at a time.
pub struct Stepper<'a> {
    kernel: &'a Kernel,
    noise: NoiseConfig,
    integrator: Integrator,
    modes: Vec<NoiseMode>,
    slots: Vec<usize>,
    run: u64,
    step: u64,
    drift: Vec<[f64; 2]>,
    drift2: Vec<[f64; 2]>,
    kick: Vec<[f64; 2]>,
    kick2: Vec<[f64; 2]>,
    trial: Vec<Point>,
}

impl<'a> Stepper<'a> {
    pub fn new(kernel: &'a Kernel, noise: NoiseConfig, integrator: Integrator, run: u64) -> Self {
        let eps = noise.cutoff.eps();
        let modes = noise
            .cutoff
            .members()
            .iter()
            .filter(|k| k.is_positive())
            .map(|&k| {
                let s = 2.0 * SQRT_2 * eps * noise.amplitude / k.norm_sq() as f64;
                let p = k.perp();
                NoiseMode {
                    k,
                    coef: [s * p[0], s * p[1]],
                    plus: noise.cutoff.index_of(k).unwrap(),
                    minus: noise.cutoff.index_of(-k).unwrap(),
                }
            })
            .collect();
        let slots = noise
            .cutoff
            .shell_order()
            .iter()
            .map(|k| noise.cutoff.index_of(*k).unwrap())
            .collect();
        Self {
            kernel,
            noise,
            integrator,
            modes,
            slots,
            run,
            step: 0,
            drift: Vec::new(),
            drift2: Vec::new(),
            kick: Vec::new(),
            kick2: Vec::new(),
            trial: Vec::new(),
        }
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    fn draw(&self, step: u64) -> Vec<f64> {
        let mut r = rng::stream(self.noise.master_seed, self.run, Purpose::TransportNoise, step);
        rng::gaussian_into_slots(&mut r, &self.slots, self.noise.dt)
    }

    /// Noise displacement `2√2 ε Σ_k σ_k(x) ΔW^k` at every position.
    fn noise_into(&self, pos: &[Point], dw: &[f64], out: &mut [[f64; 2]]) {
        let n = self.noise.cutoff.n() as i32;
        let one = Complex64::new(1.0, 0.0);
        let mut z1 = vec![one; n as usize + 1];
        let mut z2 = vec![one; 2 * n as usize + 1];
        for (x, o) in pos.iter().zip(out.iter_mut()) {
            *o = [0.0, 0.0];
            if self.noise.amplitude == 0.0 {
                continue;
            }
            powers_into(Complex64::from_polar(1.0, 2.0 * PI * x[0]), 0, &mut z1);
            powers_into(Complex64::from_polar(1.0, 2.0 * PI * x[1]), -n, &mut z2);
            for m in &self.modes {
                let z = z1[m.k.k1 as usize] * z2[(m.k.k2 + n) as usize];
                let w = z.re * dw[m.plus] + z.im * dw[m.minus];
                o[0] += m.coef[0] * w;
                o[1] += m.coef[1] * w;
            }
        }
    }

    /// Advances `state` in place using the increments of the next step.
    pub fn advance(&mut self, state: &mut VortexState) -> StepDiagnostics {
        let dw = self.draw(self.step);
        self.advance_with(state, &dw)
    }

    /// Advances `state` with caller-supplied increments (lexicographic order).
    pub fn advance_with(&mut self, state: &mut VortexState, dw: &[f64]) -> StepDiagnostics {
        let n = state.len();
        let dt = self.noise.dt;
        self.drift.resize(n, [0.0; 2]);
        self.kick.resize(n, [0.0; 2]);
        drift_into(self.kernel, &state.intensities, &state.positions, &mut self.drift);
        let mut kick = std::mem::take(&mut self.kick);
        self.noise_into(&state.positions, dw, &mut kick);
        self.kick = kick;
        let delta: Vec<[f64; 2]> = match self.integrator {
            Integrator::EulerMaruyama => (0..n)
                .map(|i| {
                    [
                        self.drift[i][0] * dt + self.kick[i][0],
                        self.drift[i][1] * dt + self.kick[i][1],
                    ]
                })
                .collect(),
            Integrator::Heun => {
                self.trial.clear();
                for i in 0..n {
                    let x = state.positions[i];
                    self.trial.push(wrap([
                        x[0] + self.drift[i][0] * dt + self.kick[i][0],
                        x[1] + self.drift[i][1] * dt + self.kick[i][1],
                    ]));
                }
                self.drift2.resize(n, [0.0; 2]);
                self.kick2.resize(n, [0.0; 2]);
                drift_into(self.kernel, &state.intensities, &self.trial, &mut self.drift2);
                let mut kick2 = std::mem::take(&mut self.kick2);
                self.noise_into(&self.trial, dw, &mut kick2);
                self.kick2 = kick2;
                (0..n)
                    .map(|i| {
                        [
                            0.5 * ((self.drift[i][0] + self.drift2[i][0]) * dt
                                + self.kick[i][0]
                                + self.kick2[i][0]),
                            0.5 * ((self.drift[i][1] + self.drift2[i][1]) * dt
                                + self.kick[i][1]
                                + self.kick2[i][1]),
                        ]
                    })
                    .collect()
            }
        };
        for i in 0..n {
            let x = state.positions[i];
            state.positions[i] = wrap([x[0] + delta[i][0], x[1] + delta[i][1]]);
            state.travel[i][0] += delta[i][0];
            state.travel[i][1] += delta[i][1];
        }
        state.time += dt;
        self.step += 1;
        let min_distance = if n >= 2 {
            closest_pair(&state.positions).0
        } else {
            f64::INFINITY
        };
        StepDiagnostics {
            min_distance,
            near_collision: min_distance < COLLISION_THRESHOLD,
        }
    }
}

/// Functional form of a single step: returns the advanced state.
pub fn step(
    kernel: &Kernel,
    state: &VortexState,
    noise: &NoiseConfig,
    integrator: Integrator,
    run: u64,
    step_index: u64,
) -> Result<(VortexState, StepDiagnostics)> {
    let mut stepper = Stepper::new(kernel, noise.clone(), integrator, run);
    stepper.step = step_index;
    let mut next = state.clone();
    let diag = stepper.advance(&mut next);
    if next.positions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("vortex positions".into()));
    }
    Ok((next, diag))
}

/// Periodic stream function `G` with `ΔG = δ − 1`, up to an additive constant.
pub fn green_function(x: Point) -> f64 {
    let x = [
        crate::torus::wrap_centered(x[0]),
        crate::torus::wrap_centered(x[1]),
    ];
    let d = (2.0 * PI * x[1]).cosh() - (2.0 * PI * x[0]).cos();
    let mut g = -0.5 * x[1] * x[1] + d.ln() / (4.0 * PI);
    for a in 1..=12 {
        let af = a as f64;
        let q = (-2.0 * PI * af).exp();
        let c = 2.0 * q / (1.0 - q);
        g -= c / af * (2.0 * PI * af * x[0]).cos() * (2.0 * PI * af * x[1]).cosh() / (2.0 * PI);
    }
    g
}

/// `Σ_{i≠j} ξ_i ξ_j G(X_i − X_j)`, conserved by the noise-free flow.
pub fn interaction_energy(state: &VortexState) -> f64 {
    let xi = state.intensities();
    let pos = state.positions();
    let mut e = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            e += 2.0 * xi[i] * xi[j] * green_function(displacement(pos[i], pos[j]));
        }
    }
    e
}

/// Writes the CSV header used for trajectory dumps.
pub fn write_trajectory_header<W: Write>(w: &mut W) -> std::io::Result<()> {
    writeln!(w, "t,i,xi,x1,x2")
}

/// Appends one row per vortex for the current time.
pub fn write_trajectory_rows<W: Write>(w: &mut W, state: &VortexState) -> std::io::Result<()> {
    for (i, (xi, x)) in state.intensities.iter().zip(&state.positions).enumerate() {
        writeln!(w, "{},{},{},{},{}", state.time, i, xi, x[0], x[1])?;
    }
    Ok(())
}
