//! Periodic Biot–Savart kernel `K = ∇^⊥G` with `ΔG = δ − 1` on the unit torus,
//! the symmetrised interaction `H_φ`, and velocity synthesis from spectral
//! vorticity.
//!
//! Two representations are available:
//!
//! * [`KernelMode::Exact`] evaluates the full periodic kernel. Summing the
//!   lattice in `x1` exactly leaves a row-of-vortices term plus a series in
//!   `x2` whose terms decay like `e^{−π a}` for `|x2| ≤ 1/2`:
//!
//!   ```text
//!   D  = cosh(2πx2) − cos(2πx1)
//!   K1 = −x2 + sinh(2πx2)/(2D) − Σ_a c_a cos(2πa x1) sinh(2πa x2)
//!   K2 =     − sin(2πx1)/(2D)  − Σ_a c_a sin(2πa x1) cosh(2πa x2)
//!   c_a = 2 e^{−2πa} / (1 − e^{−2πa})
//!   ```
//!
//! * [`KernelMode::Truncated`] is the sine series
//!   `Σ_{k∈Z²₊, |k|≤M} k^⊥/(π|k|²) sin(2πk·x)`, i.e. the exact kernel with its
//!   Fourier modes above `M` removed.
//!
//! Both are odd and divergence free, and their curl is `δ − 1` (resp. its
//! truncation).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{e_k, grad_e_k, WaveVector};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::torus::{displacement, wrap_centered, Point};

const EXACT_TERMS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    Exact,
    Truncated(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub mode: KernelMode,
    /// Side of the interpolation table; `None` disables the cache.
    pub grid_resolution: Option<usize>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            mode: KernelMode::Exact,
            grid_resolution: Some(256),
        }
    }
}

impl KernelConfig {
    pub fn exact() -> Self {
        Self {
            mode: KernelMode::Exact,
            grid_resolution: None,
        }
    }

    pub fn truncated(cutoff: u32) -> Self {
        Self {
            mode: KernelMode::Truncated(cutoff),
            grid_resolution: None,
        }
    }

    pub fn with_cache(mut self, resolution: usize) -> Self {
        self.grid_resolution = Some(resolution);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.grid_resolution) {
            (KernelMode::Truncated(0), _) => Err(Error::invalid(
                "fourier_cutoff",
                "truncated kernel needs M_K >= 1",
            )),
            (KernelMode::Truncated(m), Some(g)) if g < 4 * m as usize => Err(Error::invalid(
                "grid_resolution",
                format!("{g} does not resolve cutoff {m}; need >= {}", 4 * m),
            )),
            (KernelMode::Exact, Some(g)) if g < 16 || g % 2 != 0 => Err(Error::invalid(
                "grid_resolution",
                format!("{g} must be even and >= 16"),
            )),
            _ => Ok(()),
        }
    }
}

/// A ready-to-evaluate kernel, with its interpolation table when configured.
#[derive(Clone, Debug)]
pub struct Kernel {
    config: KernelConfig,
    exact_coeffs: [f64; EXACT_TERMS],
    truncated_terms: Vec<(i32, i32, f64)>,
    table: Option<Table>,
}

#[derive(Clone, Debug)]
struct Table {
    res: usize,
    // Exact: nodes span the closed cell [−1/2, 1/2]², (res+1)² nodes holding
    // the smooth remainder K − x^⊥/(2π|x|²).
    // Truncated: periodic nodes on [0,1)², res² nodes holding K itself.
    stride: usize,
    values: Vec<[f64; 2]>,
    singular_split: bool,
}

impl Kernel {
    pub fn new(config: KernelConfig) -> Result<Self> {
        config.validate()?;
        let mut exact_coeffs = [0.0; EXACT_TERMS];
        for (a, c) in exact_coeffs.iter_mut().enumerate() {
            let q = (-2.0 * PI * (a + 1) as f64).exp();
            *c = 2.0 * q / (1.0 - q);
        }
        let truncated_terms = match config.mode {
            KernelMode::Truncated(m) => {
                let m = m as i32;
                let mut v = Vec::new();
                for k1 in 0..=m {
                    for k2 in -m..=m {
                        let k = WaveVector { k1, k2 };
                        if (k1 == 0 && k2 <= 0) || k.norm_sq() > (m as i64) * (m as i64) {
                            continue;
                        }
                        v.push((k1, k2, 1.0 / (PI * k.norm_sq() as f64)));
                    }
                }
                v
            }
            KernelMode::Exact => Vec::new(),
        };
        let mut kernel = Self {
            config,
            exact_coeffs,
            truncated_terms,
            table: None,
        };
        if let Some(res) = config.grid_resolution {
            kernel.table = Some(kernel.build_table(res));
        }
        Ok(kernel)
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn is_cached(&self) -> bool {
        self.table.is_some()
    }

    /// Evaluates `K(x)`, through the table when one is present.
    #[inline]
    pub fn eval(&self, x: Point) -> [f64; 2] {
        self.eval_with(x, self.table.as_ref())
    }

    /// Evaluates `K(x)` without the table. `K(0) = (0, 0)`.
    pub fn eval_direct(&self, x: Point) -> [f64; 2] {
        self.eval_with(x, None)
    }

    #[inline]
    fn eval_with(&self, x: Point, table: Option<&Table>) -> [f64; 2] {
        let x = [wrap_centered(x[0]), wrap_centered(x[1])];
        if x[0] == 0.0 && x[1] == 0.0 {
            return [0.0, 0.0];
        }
        // Evaluate on one half-plane so that K(−x) = −K(x) holds bitwise.
        let flip = x[1] < 0.0 || (x[1] == 0.0 && x[0] < 0.0);
        let y = if flip { [-x[0], -x[1]] } else { x };
        let k = match (table, self.config.mode) {
            (Some(t), _) => self.eval_cached(t, y),
            (None, KernelMode::Exact) => self.eval_exact(y),
            (None, KernelMode::Truncated(_)) => self.eval_truncated(y),
        };
        if flip {
            [-k[0], -k[1]]
        } else {
            k
        }
    }

    fn eval_exact(&self, x: Point) -> [f64; 2] {
        let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
        let sh = (PI * x[1]).sinh();
        let s1 = (PI * x[0]).sin();
        // cosh(2a) − cos(2b) without cancellation
        let d = 2.0 * (sh * sh + s1 * s1);
        let mut k1 = -x[1] + (2.0 * PI * x[1]).sinh() / (2.0 * d);
        let mut k2 = -sx / (2.0 * d);
        let z = Complex64::new(cx, sx);
        let e = (2.0 * PI * x[1]).exp();
        let einv = 1.0 / e;
        let mut za = Complex64::new(1.0, 0.0);
        let (mut ep, mut em) = (1.0, 1.0);
        for c in self.exact_coeffs {
            za *= z;
            ep *= e;
            em *= einv;
            k1 -= c * za.re * 0.5 * (ep - em);
            k2 -= c * za.im * 0.5 * (ep + em);
        }
        [k1, k2]
    }

    fn eval_truncated(&self, x: Point) -> [f64; 2] {
        let m = match self.config.mode {
            KernelMode::Truncated(m) => m as i32,
            KernelMode::Exact => unreachable!(),
        };
        let (s1, c1) = (2.0 * PI * x[0]).sin_cos();
        let (s2, c2) = (2.0 * PI * x[1]).sin_cos();
        let z1 = Complex64::new(c1, s1);
        let z2 = Complex64::new(c2, s2);
        let p1 = powers(z1, 0, m);
        let p2 = powers(z2, -m, m);
        let mut out = [0.0, 0.0];
        for &(k1, k2, w) in &self.truncated_terms {
            let s = (p1[k1 as usize] * p2[(k2 + m) as usize]).im * w;
            out[0] += k2 as f64 * s;
            out[1] -= k1 as f64 * s;
        }
        out
    }

    fn build_table(&self, res: usize) -> Table {
        match self.config.mode {
            KernelMode::Exact => {
                let stride = res + 1;
                let h = 1.0 / res as f64;
                let mut values = vec![[0.0; 2]; stride * stride];
                for i in 0..stride {
                    for j in 0..stride {
                        let x = [-0.5 + i as f64 * h, -0.5 + j as f64 * h];
                        let r2 = x[0] * x[0] + x[1] * x[1];
                        values[i * stride + j] = if r2 == 0.0 {
                            [0.0, 0.0]
                        } else {
                            // the wrap inside eval_direct would move the +1/2 edge
                            let k = self.eval_exact(x);
                            let s = singular_part(x);
                            [k[0] - s[0], k[1] - s[1]]
                        };
                    }
                }
                Table {
                    res,
                    stride,
                    values,
                    singular_split: true,
                }
            }
            KernelMode::Truncated(_) => {
                let h = 1.0 / res as f64;
                let mut values = vec![[0.0; 2]; res * res];
                for i in 0..res {
                    for j in 0..res {
                        values[i * res + j] = self.eval_direct([i as f64 * h, j as f64 * h]);
                    }
                }
                Table {
                    res,
                    stride: res,
                    values,
                    singular_split: false,
                }
            }
        }
    }

    #[inline]
    /// `x` is already centred, nonzero and in the upper half-plane.
    fn eval_cached(&self, t: &Table, x: Point) -> [f64; 2] {
        let res = t.res as f64;
        if t.singular_split {
            let u = (x[0] + 0.5) * res;
            let v = (x[1] + 0.5) * res;
            let i = (u as usize).min(t.res - 1);
            let j = (v as usize).min(t.res - 1);
            let (fu, fv) = (u - i as f64, v - j as f64);
            let r = bilinear(t, i, j, i + 1, j + 1, fu, fv);
            let s = singular_part(x);
            [r[0] + s[0], r[1] + s[1]]
        } else {
            let u = (x[0] + 1.0).fract() * res;
            let v = (x[1] + 1.0).fract() * res;
            let i = (u as usize).min(t.res - 1);
            let j = (v as usize).min(t.res - 1);
            let (fu, fv) = (u - i as f64, v - j as f64);
            bilinear(t, i, j, (i + 1) % t.res, (j + 1) % t.res, fu, fv)
        }
    }
}

#[inline]
fn bilinear(t: &Table, i0: usize, j0: usize, i1: usize, j1: usize, fu: f64, fv: f64) -> [f64; 2] {
    let a = t.values[i0 * t.stride + j0];
    let b = t.values[i1 * t.stride + j0];
    let c = t.values[i0 * t.stride + j1];
    let d = t.values[i1 * t.stride + j1];
    let mut out = [0.0; 2];
    for q in 0..2 {
        out[q] = (1.0 - fu) * ((1.0 - fv) * a[q] + fv * c[q]) + fu * ((1.0 - fv) * b[q] + fv * d[q]);
    }
    out
}

/// Free-space part `x^⊥ / (2π|x|²)`.
#[inline]
fn singular_part(x: Point) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let s = 1.0 / (2.0 * PI * r2);
    [x[1] * s, -x[0] * s]
}

/// Fills `out[i]` with `z^(lo+i)` for a unit-modulus `z`.
pub(crate) fn powers_into(z: Complex64, lo: i32, out: &mut [Complex64]) {
    let hi = lo + out.len() as i32 - 1;
    let zero = (-lo).max(0) as usize;
    if lo <= 0 && hi >= 0 {
        out[zero] = Complex64::new(1.0, 0.0);
        for j in zero + 1..out.len() {
            out[j] = out[j - 1] * z;
        }
        let zi = z.conj();
        for j in (0..zero).rev() {
            out[j] = out[j + 1] * zi;
        }
    } else {
        out[0] = z.powi(lo);
        for j in 1..out.len() {
            out[j] = out[j - 1] * z;
        }
    }
}

/// `z^j` for `j` in `lo..=hi`, indexed from `lo`.
pub(crate) fn powers(z: Complex64, lo: i32, hi: i32) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
    let zi = z.conj();
    let zero = (-lo) as usize;
    if lo <= 0 && hi >= 0 {
        out[zero] = Complex64::new(1.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for j in 1..=hi {
            p *= z;
            out[zero + j as usize] = p;
        }
        let mut p = Complex64::new(1.0, 0.0);
        for j in 1..=(-lo) {
            p *= zi;
            out[zero - j as usize] = p;
        }
    } else {
        let mut p = z.powi(lo);
        for slot in out.iter_mut() {
            *slot = p;
            p *= z;
        }
    }
    out
}

/// `K(x)` for a torus displacement, evaluated directly from `cfg`.
pub fn kernel_eval(cfg: &KernelConfig, x: Point) -> Result<[f64; 2]> {
    let k = Kernel::new(KernelConfig {
        grid_resolution: None,
        ..*cfg
    })?;
    Ok(k.eval_direct(x))
}

/// `H_φ(x,y) = ½ K(x−y)·(∇φ(x) − ∇φ(y))` with `φ = e_l`; zero on the diagonal.
#[inline]
pub fn h_phi_eval(kernel: &Kernel, l: WaveVector, x: Point, y: Point) -> f64 {
    if x == y {
        return 0.0;
    }
    let k = kernel.eval(displacement(x, y));
    let gx = grad_e_k(l, x);
    let gy = grad_e_k(l, y);
    0.5 * (k[0] * (gx[0] - gy[0]) + k[1] * (gx[1] - gy[1]))
}

/// `(K∗e_l)(x) = −l^⊥/(2π|l|²) e_{−l}(x)`.
#[inline]
pub fn single_mode_velocity(l: WaveVector, x: Point) -> [f64; 2] {
    let a = -e_k(-l, x) / (2.0 * PI * l.norm_sq() as f64);
    let p = l.perp();
    [a * p[0], a * p[1]]
}

/// Gradient `∂_j u_i` of [`single_mode_velocity`]: `l^⊥_i l_j/|l|² e_l(x)`.
#[inline]
pub fn single_mode_velocity_gradient(l: WaveVector, x: Point) -> [[f64; 2]; 2] {
    let e = e_k(l, x) / l.norm_sq() as f64;
    let p = l.perp();
    let lv = l.as_f64();
    [
        [p[0] * lv[0] * e, p[0] * lv[1] * e],
        [p[1] * lv[0] * e, p[1] * lv[1] * e],
    ]
}

fn check_support(cfg: &KernelConfig, field: &SpectralField) -> Result<()> {
    if let KernelMode::Truncated(m) = cfg.mode {
        if field.cutoff() > m {
            if let Some((l, _)) = field
                .iter()
                .find(|(l, c)| l.norm_sq() > (m as i64) * (m as i64) && *c != 0.0)
            {
                return Err(Error::OutsideCutoff { mode: l, cutoff: m });
            }
        }
    }
    Ok(())
}

/// `u(x) = Σ_l ω̂_l (K∗e_l)(x)`.
pub fn velocity_from_spectral(
    cfg: &KernelConfig,
    field: &SpectralField,
    x: Point,
) -> Result<[f64; 2]> {
    check_support(cfg, field)?;
    let mut u = [0.0, 0.0];
    for (l, c) in field.iter() {
        let v = single_mode_velocity(l, x);
        u[0] += c * v[0];
        u[1] += c * v[1];
    }
    Ok(u)
}

/// Velocity gradient `∂_j u_i(x)` of the synthesised field.
pub fn velocity_gradient_from_spectral(
    cfg: &KernelConfig,
    field: &SpectralField,
    x: Point,
) -> Result<[[f64; 2]; 2]> {
    check_support(cfg, field)?;
    let mut g = [[0.0; 2]; 2];
    for (l, c) in field.iter() {
        let d = single_mode_velocity_gradient(l, x);
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] += c * d[i][j];
            }
        }
    }
    Ok(g)
}
