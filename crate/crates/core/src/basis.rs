//! Real trigonometric basis on the unit torus, the transport-noise fields built
//! from it, and exact integrals of products of basis functions.
//!
//! For a nonzero lattice vector `k` the basis function is
//!
//! ```text
//! e_k(x) = √2 cos(2π k·x)   if k is in the positive half-lattice,
//! e_k(x) = √2 sin(2π k·x)   otherwise,
//! ```
//!
//! where `k` is positive iff `k1 > 0` or `k1 = 0, k2 > 0`. The noise fields are
//! `σ_k = (1/√2) k^⊥/|k|² e_k` with `k^⊥ = (k2, −k1)`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::Point;

/// Longest product accepted by [`trig_product_integral`].
pub const MAX_PRODUCT_FACTORS: usize = 8;

/// Nonzero integer lattice vector indexing a basis function.
///
/// The derived ordering is lexicographic on `(k1, k2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector {
    pub k1: i32,
    pub k2: i32,
}

impl WaveVector {
    pub fn new(k1: i32, k2: i32) -> Result<Self> {
        if k1 == 0 && k2 == 0 {
            return Err(Error::invalid("wave vector", "(0,0) is not a basis index"));
        }
        Ok(Self { k1, k2 })
    }

    /// Constructor for literals known to be nonzero. Panics on `(0,0)`.
    pub const fn of(k1: i32, k2: i32) -> Self {
        assert!(k1 != 0 || k2 != 0, "zero wave vector");
        Self { k1, k2 }
    }

    /// True for the cosine half of the lattice.
    #[inline]
    pub fn is_positive(self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }

    #[inline]
    pub fn norm_sq(self) -> i64 {
        let (a, b) = (self.k1 as i64, self.k2 as i64);
        a * a + b * b
    }

    #[inline]
    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// `k^⊥ = (k2, −k1)`.
    #[inline]
    pub fn perp(self) -> [f64; 2] {
        [self.k2 as f64, -(self.k1 as f64)]
    }

    #[inline]
    pub fn as_f64(self) -> [f64; 2] {
        [self.k1 as f64, self.k2 as f64]
    }

    /// Phase `2π k·x`.
    #[inline]
    pub fn phase(self, x: Point) -> f64 {
        2.0 * PI * (self.k1 as f64 * x[0] + self.k2 as f64 * x[1])
    }

    #[inline]
    pub fn dot(self, other: WaveVector) -> i64 {
        self.k1 as i64 * other.k1 as i64 + self.k2 as i64 * other.k2 as i64
    }

    /// Representative of `{k, −k}` lying in the positive half-lattice.
    #[inline]
    pub fn positive_rep(self) -> Self {
        if self.is_positive() {
            self
        } else {
            -self
        }
    }
}

impl Neg for WaveVector {
    type Output = WaveVector;
    fn neg(self) -> Self::Output {
        WaveVector {
            k1: -self.k1,
            k2: -self.k2,
        }
    }
}

impl Add for WaveVector {
    type Output = WaveVector;
    fn add(self, o: Self) -> Self::Output {
        WaveVector {
            k1: self.k1 + o.k1,
            k2: self.k2 + o.k2,
        }
    }
}

impl Sub for WaveVector {
    type Output = WaveVector;
    fn sub(self, o: Self) -> Self::Output {
        self + (-o)
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

impl std::str::FromStr for WaveVector {
    type Err = Error;

    /// Accepts `k1,k2`, `k1:k2` or `(k1,k2)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = t.split([',', ':']);
        let parse = |p: Option<&str>| -> Result<i32> {
            p.map(str::trim)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::invalid("wave vector", format!("cannot parse {s:?}")))
        };
        let k1 = parse(parts.next())?;
        let k2 = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::invalid("wave vector", format!("cannot parse {s:?}")));
        }
        WaveVector::new(k1, k2)
    }
}

/// Every nonzero `k` with `|k| ≤ n`, in lexicographic order. `n = 0` is empty.
pub fn lambda_set(n: u32) -> Vec<WaveVector> {
    let n = n as i32;
    let r2 = (n as i64) * (n as i64);
    let mut out = Vec::new();
    for k1 in -n..=n {
        for k2 in -n..=n {
            let k = WaveVector { k1, k2 };
            if (k1 != 0 || k2 != 0) && k.norm_sq() <= r2 {
                out.push(k);
            }
        }
    }
    out
}

/// `ε_n = (Σ_{k∈Λ_n} |k|⁻²)^{-1/2}`.
pub fn eps_n(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("cutoff", "eps_n needs n >= 1 (empty sum)"));
    }
    let s: f64 = lambda_set(n).iter().map(|k| 1.0 / k.norm_sq() as f64).sum();
    Ok(s.powf(-0.5))
}

/// The index set `Λ_n` together with its normalisation `ε_n`.
#[derive(Clone, Debug)]
pub struct SpectralCutoff {
    n: u32,
    members: Vec<WaveVector>,
    eps: f64,
}

impl SpectralCutoff {
    pub fn new(n: u32) -> Result<Self> {
        let eps = eps_n(n)?;
        Ok(Self {
            n,
            members: lambda_set(n),
            eps,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn members(&self) -> &[WaveVector] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Position of `k` in the lexicographic member list.
    pub fn index_of(&self, k: WaveVector) -> Option<usize> {
        self.members.binary_search(&k).ok()
    }

    /// Members sorted by `(|k|², k1, k2)`. The list for `n` is a prefix of the
    /// list for any larger cutoff.
    pub fn shell_order(&self) -> Vec<WaveVector> {
        let mut v = self.members.clone();
        v.sort_by_key(|k| (k.norm_sq(), k.k1, k.k2));
        v
    }
}

/// `e_k(x)`.
#[inline]
pub fn e_k(k: WaveVector, x: Point) -> f64 {
    let th = k.phase(x);
    if k.is_positive() {
        SQRT_2 * th.cos()
    } else {
        SQRT_2 * th.sin()
    }
}

/// `∇e_k(x)`; equals `2π k e_{−k}(x)` for both classes.
#[inline]
pub fn grad_e_k(k: WaveVector, x: Point) -> [f64; 2] {
    let th = k.phase(x);
    let d = if k.is_positive() {
        -SQRT_2 * th.sin()
    } else {
        SQRT_2 * th.cos()
    };
    let kv = k.as_f64();
    [2.0 * PI * kv[0] * d, 2.0 * PI * kv[1] * d]
}

/// `∇²e_k(x) = −4π² k⊗k e_k(x)`, row-major.
#[inline]
pub fn hess_e_k(k: WaveVector, x: Point) -> [[f64; 2]; 2] {
    let v = -4.0 * PI * PI * e_k(k, x);
    let kv = k.as_f64();
    [
        [v * kv[0] * kv[0], v * kv[0] * kv[1]],
        [v * kv[1] * kv[0], v * kv[1] * kv[1]],
    ]
}

/// Transport-noise field `σ_k(x) = (1/√2) k^⊥/|k|² e_k(x)`.
#[inline]
pub fn sigma_k(k: WaveVector, x: Point) -> [f64; 2] {
    let a = e_k(k, x) / (SQRT_2 * k.norm_sq() as f64);
    let p = k.perp();
    [a * p[0], a * p[1]]
}

/// Jacobian `∂_j σ_k^i`, row-major in `(i, j)`.
#[inline]
pub fn grad_sigma_k(k: WaveVector, x: Point) -> [[f64; 2]; 2] {
    let g = grad_e_k(k, x);
    let s = 1.0 / (SQRT_2 * k.norm_sq() as f64);
    let p = k.perp();
    [
        [s * p[0] * g[0], s * p[0] * g[1]],
        [s * p[1] * g[0], s * p[1] * g[1]],
    ]
}

/// `C_{k,l} = k^⊥·l / |k|²`.
#[inline]
pub fn c_coeff(k: WaveVector, l: WaveVector) -> f64 {
    let num = k.k2 as i64 * l.k1 as i64 - k.k1 as i64 * l.k2 as i64;
    num as f64 / k.norm_sq() as f64
}

/// Exact `∫_{T²} Π_i e_{k_i}(x) dx`.
///
/// Each factor is expanded as `(1/√2)(a e^{iθ} + b e^{−iθ})` with `a = b = 1`
/// for cosines and `a = −i, b = i` for sines; the integral keeps the sign
/// patterns whose frequencies cancel. The surviving coefficient is a Gaussian
/// integer, so the result is an exact integer multiple of `2^{−m/2}`.
pub fn trig_product_integral(ids: &[WaveVector]) -> Result<f64> {
    if ids.len() > MAX_PRODUCT_FACTORS {
        return Err(Error::invalid(
            "trig_product_integral",
            format!(
                "{} factors exceeds the limit of {MAX_PRODUCT_FACTORS}",
                ids.len()
            ),
        ));
    }
    Ok(trig_product_integral_unchecked(ids))
}

/// [`trig_product_integral`] without the length guard. Callers keep products
/// short; the cost is `2^{m−1}`.
pub fn trig_product_integral_unchecked(ids: &[WaveVector]) -> f64 {
    let m = ids.len();
    if m == 0 {
        return 1.0;
    }
    // Flipping every sign conjugates the coefficient and preserves the
    // frequency constraint, so fix the first sign and take twice the real part.
    let (first, rest) = ids.split_first().unwrap();
    let (re, im) = if first.is_positive() { (1, 0) } else { (0, -1) };
    let count = expand(rest, first.k1, first.k2, re, im);
    let scale = 0.5f64.powf(m as f64 / 2.0);
    2.0 * count as f64 * scale
}

// Returns the real part of the accumulated Gaussian-integer coefficient.
fn expand(rest: &[WaveVector], s1: i32, s2: i32, re: i64, im: i64) -> i64 {
    match rest.split_first() {
        None => {
            if s1 == 0 && s2 == 0 {
                re
            } else {
                0
            }
        }
        Some((k, tail)) => {
            if k.is_positive() {
                expand(tail, s1 + k.k1, s2 + k.k2, re, im)
                    + expand(tail, s1 - k.k1, s2 - k.k2, re, im)
            } else {
                // (re + i im)(−i) = im − i re ; (re + i im)(i) = −im + i re
                expand(tail, s1 + k.k1, s2 + k.k2, im, -re)
                    + expand(tail, s1 - k.k1, s2 - k.k2, -im, re)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(a: i32, b: i32) -> WaveVector {
        WaveVector::of(a, b)
    }

    #[test]
    fn lambda_small_cutoffs() {
        assert!(lambda_set(0).is_empty());
        let l1 = lambda_set(1);
        assert_eq!(l1, vec![wv(-1, 0), wv(0, -1), wv(0, 1), wv(1, 0)]);
        let l2 = lambda_set(2);
        assert_eq!(l2.len(), 12);
        for r2 in [1, 2, 4] {
            assert_eq!(l2.iter().filter(|k| k.norm_sq() == r2).count(), 4);
        }
        let mut sorted = l2.clone();
        sorted.sort();
        assert_eq!(sorted, l2);
    }

    #[test]
    fn lambda_sizes_divisible_by_four() {
        for n in 1..=40 {
            assert_eq!(lambda_set(n).len() % 4, 0, "n = {n}");
        }
    }

    #[test]
    fn eps_values() {
        assert!(eps_n(0).is_err());
        assert!((eps_n(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((eps_n(2).unwrap() - 7f64.powf(-0.5)).abs() < 1e-15);
        for n in 1..64 {
            assert!(eps_n(n + 1).unwrap() < eps_n(n).unwrap());
        }
    }

    #[test]
    fn sign_classes() {
        assert!(wv(1, 0).is_positive());
        assert!(wv(0, 1).is_positive());
        assert!(wv(1, -5).is_positive());
        assert!(!wv(0, -1).is_positive());
        assert!(!wv(-1, 3).is_positive());
        for k in lambda_set(5) {
            assert_ne!(k.is_positive(), (-k).is_positive());
        }
    }

    #[test]
    fn basis_point_values() {
        let r2 = SQRT_2;
        assert!((e_k(wv(1, 0), [0.0, 0.0]) - r2).abs() < 1e-15);
        assert!((e_k(wv(1, 0), [0.5, 0.0]) + r2).abs() < 1e-15);
        assert!((e_k(wv(0, -1), [0.0, 0.25]) + r2).abs() < 1e-15);
    }

    #[test]
    fn sigma_point_values() {
        let s = sigma_k(wv(1, 0), [0.0, 0.0]);
        assert!(s[0].abs() < 1e-15 && (s[1] + 1.0).abs() < 1e-15);
        let s = sigma_k(wv(1, 0), [0.25, 0.0]);
        assert!(s[0].abs() < 1e-15 && s[1].abs() < 1e-15);
        for k in lambda_set(4) {
            for x in [[0.1, 0.7], [0.33, 0.2], [0.9, 0.05]] {
                let a = sigma_k(k, x);
                let b = sigma_k(-k, x);
                let tot = a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1];
                assert!((tot - 1.0 / k.norm_sq() as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn c_coeff_values() {
        assert_eq!(c_coeff(wv(1, 0), wv(0, 1)), -1.0);
        assert_eq!(c_coeff(wv(1, 0), wv(1, 0)), 0.0);
        assert_eq!(c_coeff(wv(1, 1), wv(2, 0)), 1.0);
        for k in lambda_set(3) {
            assert_eq!(c_coeff(k, k), 0.0);
            for l in lambda_set(3) {
                assert_eq!(c_coeff(-k, l), -c_coeff(k, l));
            }
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let h = 1e-5;
        for k in lambda_set(3) {
            for x in [[0.13, 0.71], [0.5, 0.02], [0.87, 0.44]] {
                let g = grad_e_k(k, x);
                let hs = hess_e_k(k, x);
                for d in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[d] += h;
                    xm[d] -= h;
                    let fd = (e_k(k, xp) - e_k(k, xm)) / (2.0 * h);
                    assert!((fd - g[d]).abs() < 1e-6 * (1.0 + g[d].abs()), "grad {k} {d}");
                    let gp = grad_e_k(k, xp);
                    let gm = grad_e_k(k, xm);
                    for r in 0..2 {
                        let fd = (gp[r] - gm[r]) / (2.0 * h);
                        assert!(
                            (fd - hs[r][d]).abs() < 1e-6 * (1.0 + hs[r][d].abs()),
                            "hess {k}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn product_integrals_small_cases() {
        assert_eq!(trig_product_integral(&[]).unwrap(), 1.0);
        for k in lambda_set(3) {
            assert_eq!(trig_product_integral(&[k]).unwrap(), 0.0);
            for l in lambda_set(3) {
                let v = trig_product_integral(&[k, l]).unwrap();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-15, "{k} {l}");
            }
        }
        let (a, b) = (wv(1, 0), wv(0, 1));
        assert!((trig_product_integral(&[a, a, b, b]).unwrap() - 1.0).abs() < 1e-15);
        assert!((trig_product_integral(&[a, a, a, a]).unwrap() - 1.5).abs() < 1e-15);
        assert!(trig_product_integral(&[a; 9]).is_err());
    }

    #[test]
    fn parses_wave_vectors() {
        assert_eq!("1,0".parse::<WaveVector>().unwrap(), wv(1, 0));
        assert_eq!("(-2, 3)".parse::<WaveVector>().unwrap(), wv(-2, 3));
        assert_eq!("0:-1".parse::<WaveVector>().unwrap(), wv(0, -1));
        assert!("0,0".parse::<WaveVector>().is_err());
        assert!("1".parse::<WaveVector>().is_err());
    }
}
