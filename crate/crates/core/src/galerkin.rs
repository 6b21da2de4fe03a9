//! Spectral Galerkin truncation of the white-noise forced vorticity equation
//! `dω = (−u·∇ω + Δω) dt + √2 ∇^⊥·dW` on `Λ_M`.
//!
//! Per mode, `dω̂_l = (B̂_l − 4π²|l|² ω̂_l) dt + 2√2π|l| dβ_l`, so each linear
//! mode is an Ornstein–Uhlenbeck process with stationary variance 1.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{c_coeff, lambda_set, trig_product_integral_unchecked, SpectralCutoff, WaveVector};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::rng::{self, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalerkinConfig {
    pub cutoff: u32,
    pub dt: f64,
    pub seed: u64,
    /// When false only the Ornstein–Uhlenbeck part is integrated.
    pub nonlinear: bool,
}

impl GalerkinConfig {
    pub fn new(cutoff: u32, dt: f64, seed: u64) -> Result<Self> {
        let c = Self {
            cutoff,
            dt,
            seed,
            nonlinear: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff == 0 {
            return Err(Error::invalid("cutoff", "Galerkin cutoff must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "time step must be positive"));
        }
        let m = self.cutoff as f64;
        if self.dt * 4.0 * PI * PI * m * m >= 1.0 {
            return Err(Error::invalid(
                "dt",
                format!("dt·4π²M² = {:.3} must stay below 1", self.dt * 4.0 * PI * PI * m * m),
            ));
        }
        Ok(())
    }
}

/// Independent standard normal coefficients on `Λ_M`, drawn in shell order.
pub fn init_white_noise(cutoff: u32, seed: u64, run: u64) -> Result<SpectralField> {
    let sc = SpectralCutoff::new(cutoff)?;
    let mut r = rng::stream(seed, run, Purpose::GalerkinInit, 0);
    let v = rng::gaussian_per_mode(&mut r, &sc, &sc.shell_order(), 1.0);
    SpectralField::from_vec(cutoff, v)
}

/// Precomputed triad coefficients: `B̂_l = Σ coef · ω̂_p ω̂_q`.
#[derive(Clone, Debug)]
pub struct Nonlinearity {
    cutoff: u32,
    triads: Vec<(u32, u32, u32, f64)>,
}

impl Nonlinearity {
    /// `B̂_l = −⟨u·∇ω, e_l⟩ = Σ_{p,q} ω̂_p ω̂_q C_{q,p} ∫ e_{−p} e_{−q} e_l`,
    /// using `K∗e_q = −q^⊥/(2π|q|²) e_{−q}` and `∇e_p = 2πp e_{−p}`.
    pub fn new(cutoff: u32) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::invalid("cutoff", "Galerkin cutoff must be at least 1"));
        }
        let modes = lambda_set(cutoff);
        let idx = |k: WaveVector| modes.binary_search(&k).ok();
        let mut triads = Vec::new();
        for (ip, &p) in modes.iter().enumerate() {
            for (iq, &q) in modes.iter().enumerate() {
                let c = c_coeff(q, p);
                if c == 0.0 {
                    continue;
                }
                let mut seen: Vec<WaveVector> = Vec::with_capacity(4);
                for s in [p + q, p - q] {
                    for l in [s, -s] {
                        if l.k1 == 0 && l.k2 == 0 || seen.contains(&l) {
                            continue;
                        }
                        seen.push(l);
                        if let Some(il) = idx(l) {
                            let t = trig_product_integral_unchecked(&[-p, -q, l]);
                            if t != 0.0 {
                                triads.push((il as u32, ip as u32, iq as u32, c * t));
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { cutoff, triads })
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn triad_count(&self) -> usize {
        self.triads.len()
    }

    pub fn apply_into(&self, w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(l, p, q, c) in &self.triads {
            out[l as usize] += c * w[p as usize] * w[q as usize];
        }
    }

    pub fn apply(&self, field: &SpectralField) -> Result<SpectralField> {
        if field.cutoff() != self.cutoff {
            return Err(Error::Mismatch(format!(
                "field cutoff {} vs nonlinearity cutoff {}",
                field.cutoff(),
                self.cutoff
            )));
        }
        let mut out = SpectralField::zeros(self.cutoff)?;
        self.apply_into(field.coeffs(), out.coeffs_mut());
        Ok(out)
    }
}

/// `B̂(ω)` for a field on `Λ_M`.
pub fn nonlinear_term(field: &SpectralField) -> Result<SpectralField> {
    Nonlinearity::new(field.cutoff())?.apply(field)
}

/// Integrates one Galerkin trajectory.
pub struct GalerkinSolver {
    config: GalerkinConfig,
    nonlinearity: Nonlinearity,
    slots: Vec<usize>,
    decay: Vec<f64>,
    spread: Vec<f64>,
    scratch: Vec<f64>,
    orthogonality: f64,
    run: u64,
    step: u64,
}

impl GalerkinSolver {
    pub fn new(config: GalerkinConfig, run: u64) -> Result<Self> {
        config.validate()?;
        let cutoff = SpectralCutoff::new(config.cutoff)?;
        let nonlinearity = Nonlinearity::new(config.cutoff)?;
        let (decay, spread) = cutoff
            .members()
            .iter()
            .map(|l| {
                let lam = 4.0 * PI * PI * l.norm_sq() as f64;
                let d = (-lam * config.dt).exp();
                (d, (1.0 - d * d).sqrt())
            })
            .unzip();
        Ok(Self {
            config,
            nonlinearity,
            slots: cutoff
                .shell_order()
                .iter()
                .map(|l| cutoff.index_of(*l).unwrap())
                .collect(),
            decay,
            spread,
            scratch: vec![0.0; cutoff.len()],
            orthogonality: 0.0,
            run,
            step: 0,
        })
    }

    pub fn config(&self) -> &GalerkinConfig {
        &self.config
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn initial_field(&self) -> Result<SpectralField> {
        init_white_noise(self.config.cutoff, self.config.seed, self.run)
    }

    /// `B̂` evaluated at the start of the last step (zeros when linear).
    pub fn last_nonlinear(&self) -> &[f64] {
        &self.scratch
    }

    /// `Σ_l ω̂_l B̂_l` from the last step; zero up to rounding.
    pub fn last_orthogonality(&self) -> f64 {
        self.orthogonality
    }

    /// Explicit Euler for `B̂` followed by the exact OU update.
    pub fn advance(&mut self, field: &mut SpectralField) -> Result<()> {
        if field.cutoff() != self.config.cutoff {
            return Err(Error::Mismatch("field cutoff differs from solver cutoff".into()));
        }
        let dt = self.config.dt;
        let w = field.coeffs_mut();
        if self.config.nonlinear {
            self.nonlinearity.apply_into(w, &mut self.scratch);
            self.orthogonality = w.iter().zip(&self.scratch).map(|(a, b)| a * b).sum();
            for (x, b) in w.iter_mut().zip(&self.scratch) {
                *x += dt * b;
            }
        }
        let mut r = rng::stream(self.config.seed, self.run, Purpose::GalerkinNoise, self.step);
        for &i in &self.slots {
            let z: f64 = StandardNormal.sample(&mut r);
            w[i] = self.decay[i] * w[i] + self.spread[i] * z;
        }
        self.step += 1;
        if !field.is_finite() {
            return Err(Error::NonFinite(format!("Galerkin field after step {}", self.step)));
        }
        Ok(())
    }
}

/// Functional single step for run `run`, step `step_index`.
pub fn galerkin_step(
    field: &SpectralField,
    config: &GalerkinConfig,
    run: u64,
    step_index: u64,
) -> Result<SpectralField> {
    let mut s = GalerkinSolver::new(*config, run)?;
    s.step = step_index;
    let mut out = field.clone();
    s.advance(&mut out)?;
    Ok(out)
}
