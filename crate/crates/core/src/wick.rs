//! Exact Gaussian moments of the initial point-vortex ensemble.
//!
//! Under the initial law (`ξ_i` iid `N(0,1)`, `X_i` iid uniform), pairings
//! `⟨ω, f⟩` are sums of `N` iid mean-zero terms, so products of four of them
//! reduce to Wick pairings of the intensities and products of exact
//! trigonometric integrals.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::basis::{c_coeff, eps_n, lambda_set, trig_product_integral_unchecked as tpi, WaveVector, MAX_PRODUCT_FACTORS};
use crate::error::{Error, Result};
use crate::torus::Point;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn compensated<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::default();
    it.into_iter().for_each(|v| s.add(v));
    s.value()
}

/// One separable term `c · Π_p e_p(x) · Π_q e_q(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableTerm {
    pub coef: f64,
    pub x: Vec<WaveVector>,
    pub y: Vec<WaveVector>,
}

impl SeparableTerm {
    pub fn new(coef: f64, x: Vec<WaveVector>, y: Vec<WaveVector>) -> Self {
        Self { coef, x, y }
    }
}

/// A symmetric kernel `f(x,y)` stored as a finite sum of separable terms.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricKernelSpec {
    terms: Vec<SeparableTerm>,
}

/// Largest number of factors per term, so that `f(x,x)²` stays within the
/// product-integral limit.
pub const MAX_TERM_FACTORS: usize = MAX_PRODUCT_FACTORS / 2;

type Key = (Vec<WaveVector>, Vec<WaveVector>);

impl SymmetricKernelSpec {
    /// Symmetrises `Σ terms` as `½(f(x,y) + f(y,x))` at the coefficient level.
    pub fn symmetrize(terms: Vec<SeparableTerm>) -> Result<Self> {
        let mut raw: BTreeMap<Key, f64> = BTreeMap::new();
        for t in terms {
            if t.x.len() + t.y.len() > MAX_TERM_FACTORS {
                return Err(Error::invalid(
                    "kernel term",
                    format!("at most {MAX_TERM_FACTORS} basis factors per term"),
                ));
            }
            if !t.coef.is_finite() {
                return Err(Error::NonFinite("kernel coefficient".into()));
            }
            let mut x = t.x;
            let mut y = t.y;
            x.sort();
            y.sort();
            *raw.entry((x, y)).or_insert(0.0) += t.coef;
        }
        let mut terms = Vec::new();
        for ((x, y), c) in &raw {
            let swapped = raw.get(&(y.clone(), x.clone())).copied().unwrap_or(0.0);
            let coef = 0.5 * (c + swapped);
            if coef != 0.0 {
                terms.push(SeparableTerm::new(coef, x.clone(), y.clone()));
            }
            if !raw.contains_key(&(y.clone(), x.clone())) && coef != 0.0 {
                terms.push(SeparableTerm::new(coef, y.clone(), x.clone()));
            }
        }
        Ok(Self { terms })
    }

    /// `f ≡ c` (empty products).
    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![SeparableTerm::new(c, vec![], vec![])],
        }
    }

    /// `f(x,y) = e_a(x) e_a(y)`.
    pub fn rank_one(a: WaveVector) -> Self {
        Self {
            terms: vec![SeparableTerm::new(1.0, vec![a], vec![a])],
        }
    }

    /// `H_{e_l}(x,y) = ½ K(x−y)·(∇e_l(x) − ∇e_l(y))` for the kernel truncated
    /// to `|k| ≤ kernel_cutoff`, using
    /// `sin 2πk·(x−y) = ½[e_k(x)e_{−k}(y) − e_{−k}(x)e_k(y)]` for positive `k`.
    pub fn h_phi(l: WaveVector, kernel_cutoff: u32) -> Result<Self> {
        let ml = -l;
        let mut terms = Vec::new();
        for k in lambda_set(kernel_cutoff).into_iter().filter(|k| k.is_positive()) {
            let c = c_coeff(k, l);
            if c == 0.0 {
                continue;
            }
            let h = 0.5 * c;
            // (e_k(x)e_{−k}(y) − e_{−k}(x)e_k(y)) · (e_{−l}(x) − e_{−l}(y))
            terms.push(SeparableTerm::new(h, vec![k, ml], vec![-k]));
            terms.push(SeparableTerm::new(-h, vec![k], vec![-k, ml]));
            terms.push(SeparableTerm::new(-h, vec![-k, ml], vec![k]));
            terms.push(SeparableTerm::new(h, vec![-k], vec![k, ml]));
        }
        Self::symmetrize(terms)
    }

    pub fn terms(&self) -> &[SeparableTerm] {
        &self.terms
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| SeparableTerm::new(s * t.coef, t.x.clone(), t.y.clone()))
                .collect(),
        }
    }

    pub fn eval(&self, x: Point, y: Point) -> f64 {
        use crate::basis::e_k;
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * t.x.iter().map(|k| e_k(*k, x)).product::<f64>()
                    * t.y.iter().map(|k| e_k(*k, y)).product::<f64>()
            })
            .sum()
    }

    /// Coefficient-level symmetry: the term map is invariant under `x ↔ y`.
    pub fn is_symmetric(&self) -> bool {
        let map: BTreeMap<Key, f64> = self
            .terms
            .iter()
            .map(|t| ((t.x.clone(), t.y.clone()), t.coef))
            .collect();
        map.iter()
            .all(|((x, y), c)| map.get(&(y.clone(), x.clone())) == Some(c))
    }

    /// `∫ f(x,x) dx`.
    pub fn diagonal_integral(&self) -> f64 {
        compensated(self.terms.iter().map(|t| t.coef * tpi(&cat(&[&t.x, &t.y]))))
    }

    /// `∫ f(x,x)² dx`.
    pub fn diagonal_square_integral(&self) -> f64 {
        self.pair_sum(|a, b| tpi(&cat(&[&a.x, &a.y, &b.x, &b.y])))
    }

    /// `∫∫ f(x,y)² dx dy`.
    pub fn square_integral(&self) -> f64 {
        self.pair_sum(|a, b| {
            let ix = tpi(&cat(&[&a.x, &b.x]));
            if ix == 0.0 {
                0.0
            } else {
                ix * tpi(&cat(&[&a.y, &b.y]))
            }
        })
    }

    fn pair_sum<F: Fn(&SeparableTerm, &SeparableTerm) -> f64 + Sync>(&self, g: F) -> f64 {
        let rows: Vec<f64> = self
            .terms
            .par_iter()
            .map(|a| compensated(self.terms.iter().map(|b| a.coef * b.coef * g(a, b))))
            .collect();
        compensated(rows)
    }
}

fn cat(parts: &[&[WaveVector]]) -> Vec<WaveVector> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn check_n(n_vortices: usize) -> Result<f64> {
    if n_vortices == 0 {
        return Err(Error::invalid("n_vortices", "need at least one vortex"));
    }
    Ok(n_vortices as f64)
}

/// `E⟨ω⊗ω, f⟩² = (3/N)∫f(x,x)² + ((N−1)/N)(∫f(x,x))² + (2(N−1)/N)∫∫f²`.
pub fn exact_second_moment(f: &SymmetricKernelSpec, n_vortices: usize) -> Result<f64> {
    let n = check_n(n_vortices)?;
    let d = f.diagonal_integral();
    Ok((3.0 * f.diagonal_square_integral() + (n - 1.0) * (d * d + 2.0 * f.square_integral())) / n)
}

/// Set partitions of `{0, 1, 2, 3}` as block labels per position.
fn partitions_of_four() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for b1 in 0..=1 {
        for b2 in 0..=(b1.max(0) + 1) {
            let m2 = b1.max(b2);
            for b3 in 0..=(m2 + 1) {
                out.push([0, b1, b2, b3]);
            }
        }
    }
    out
}

/// `E ξ^p` for a standard normal.
fn normal_moment(p: usize) -> f64 {
    match p {
        0 => 1.0,
        2 => 1.0,
        4 => 3.0,
        _ => 0.0,
    }
}

/// `E Π_{j<4} ⟨ω, F_j⟩` by summing over which of the four particle indices
/// coincide. `factors[j]` lists the basis functions whose product is `F_j`.
pub fn fourfold_moment(factors: [&[WaveVector]; 4], n_vortices: usize) -> Result<f64> {
    let n = check_n(n_vortices)?;
    let mut total = 0.0;
    for p in partitions_of_four() {
        let blocks = p.iter().max().unwrap() + 1;
        let mut count = 1.0;
        for b in 0..blocks {
            count *= n - b as f64;
        }
        if count == 0.0 {
            continue;
        }
        let mut weight = count;
        let mut integral = 1.0;
        for b in 0..blocks {
            let members: Vec<usize> = (0..4).filter(|&j| p[j] == b).collect();
            weight *= normal_moment(members.len());
            let f: Vec<WaveVector> = members.iter().flat_map(|&j| factors[j].iter().copied()).collect();
            integral *= tpi(&f);
        }
        total += weight * integral;
    }
    Ok(total / (n * n))
}

/// `E⟨ω⊗ω, f⟩²` by direct enumeration of index coincidences and Wick pairings.
pub fn direct_second_moment(f: &SymmetricKernelSpec, n_vortices: usize) -> Result<f64> {
    let n = check_n(n_vortices)?;
    let mut total = CompensatedSum::default();
    for p in partitions_of_four() {
        let blocks = p.iter().max().unwrap() + 1;
        let mut weight = 1.0;
        for b in 0..blocks {
            weight *= (n - b as f64) * normal_moment(p.iter().filter(|&&q| q == b).count());
        }
        if weight == 0.0 {
            continue;
        }
        for a in f.terms() {
            for c in f.terms() {
                let slots: [&[WaveVector]; 4] = [&a.x, &a.y, &c.x, &c.y];
                let mut integral = 1.0;
                for b in 0..blocks {
                    let fs: Vec<WaveVector> = (0..4)
                        .filter(|&j| p[j] == b)
                        .flat_map(|j| slots[j].iter().copied())
                        .collect();
                    integral *= tpi(&fs);
                    if integral == 0.0 {
                        break;
                    }
                }
                total.add(weight * a.coef * c.coef * integral);
            }
        }
    }
    Ok(total.value() / (n * n))
}

/// Default cap on the number of `(k, k')` pairs in the double sums.
pub fn default_budget() -> usize {
    let m = lambda_set(16).len();
    m * m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RPath {
    /// Pairing expansion applied term by term, no case split.
    Generic,
    /// `S₁ + S₂ + S₃` for `l ≠ m`, `J₁ + J₂` for `l = m`.
    Decomposed,
}

/// Terms of the decomposition for `l ≠ m`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SDecomposition {
    pub s11: f64,
    pub s12: f64,
    pub s21: f64,
    pub s22: f64,
    pub s31: f64,
    pub s32: f64,
}

impl SDecomposition {
    pub fn s1(&self) -> f64 {
        self.s11 + self.s12
    }
    pub fn s2(&self) -> f64 {
        self.s21 + self.s22
    }
    pub fn s3(&self) -> f64 {
        self.s31 + self.s32
    }
    pub fn total(&self) -> f64 {
        self.s1() + self.s2() + self.s3()
    }
}

/// Terms of the decomposition for `l = m`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JDecomposition {
    pub j1: f64,
    pub j2: f64,
    /// `Σ_k C²_{k,l}`, which equals `½ ε_n^{−2} |l|²`.
    pub c_sum: f64,
}

impl JDecomposition {
    pub fn total(&self) -> f64 {
        self.j1 + self.j2 - self.c_sum * self.c_sum
    }
}

struct RSetup {
    ks: Vec<WaveVector>,
    cs: Vec<f64>,
    n: f64,
}

fn r_setup(l: WaveVector, m: WaveVector, n: u32, n_vortices: usize, budget: usize) -> Result<RSetup> {
    if l.norm_sq() == 0 || m.norm_sq() == 0 {
        return Err(Error::invalid("mode", "l and m must be nonzero"));
    }
    eps_n(n)?;
    let nv = check_n(n_vortices)?;
    let lambda = lambda_set(n);
    let required = lambda.len() * lambda.len();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let (ks, cs) = lambda
        .into_iter()
        .map(|k| (k, c_coeff(k, l) * c_coeff(k, m)))
        .filter(|(_, c)| *c != 0.0)
        .unzip();
    Ok(RSetup { ks, cs, n: nv })
}

fn double_sum<F: Fn(WaveVector, WaveVector) -> f64 + Sync>(s: &RSetup, g: F) -> f64 {
    let rows: Vec<f64> = (0..s.ks.len())
        .into_par_iter()
        .map(|i| {
            compensated((0..s.ks.len()).map(|j| s.cs[i] * s.cs[j] * g(s.ks[i], s.ks[j])))
        })
        .collect();
    compensated(rows)
}

/// `E R_{l,m}` under the initial law (zero up to rounding).
pub fn exact_r_mean(l: WaveVector, m: WaveVector, n: u32, n_vortices: usize) -> Result<f64> {
    let s = r_setup(l, m, n, n_vortices, usize::MAX)?;
    let delta = if l == m { 1.0 } else { 0.0 };
    Ok(compensated(
        s.ks.iter()
            .zip(&s.cs)
            .map(|(k, c)| c * (tpi(&[*k, *k, l, m]) - delta)),
    ))
}

/// `E R²_{l,m}` for the initial ensemble of `n_vortices` vortices, with the
/// default term budget.
pub fn exact_r_second_moment(l: WaveVector, m: WaveVector, n: u32, n_vortices: usize) -> Result<f64> {
    exact_r_second_moment_with(l, m, n, n_vortices, default_budget(), RPath::Decomposed)
}

pub fn exact_r_second_moment_with(
    l: WaveVector,
    m: WaveVector,
    n: u32,
    n_vortices: usize,
    budget: usize,
    path: RPath,
) -> Result<f64> {
    match path {
        RPath::Generic => r_second_moment_generic(l, m, n, n_vortices, budget),
        RPath::Decomposed if l == m => Ok(j_decomposition(l, n, n_vortices, budget)?.total()),
        RPath::Decomposed => Ok(s_decomposition(l, m, n, n_vortices, budget)?.total()),
    }
}

fn r_second_moment_generic(l: WaveVector, m: WaveVector, n: u32, nv: usize, budget: usize) -> Result<f64> {
    let s = r_setup(l, m, n, nv, budget)?;
    let delta = if l == m { 1.0 } else { 0.0 };
    let w = 1.0 - 1.0 / s.n;
    let d = 3.0 / s.n;
    Ok(double_sum(&s, |k, kp| {
        let ab = tpi(&[k, k, l, m]);
        let abp = tpi(&[kp, kp, l, m]);
        let aa = tpi(&[k, kp, l, l]);
        let bb = tpi(&[k, kp, m, m]);
        let cross = tpi(&[k, l, kp, m]);
        let cross2 = tpi(&[kp, l, k, m]);
        let diag = tpi(&[k, l, k, m, kp, l, kp, m]);
        let e4 = w * (ab * abp + aa * bb + cross * cross2) + d * diag;
        e4 - delta * ab - delta * abp + delta
    }))
}

/// `S`-terms for `l ≠ m`.
pub fn s_decomposition(l: WaveVector, m: WaveVector, n: u32, nv: usize, budget: usize) -> Result<SDecomposition> {
    if l == m {
        return Err(Error::invalid("modes", "S decomposition requires l ≠ m"));
    }
    let s = r_setup(l, m, n, nv, budget)?;
    let w = 1.0 - 1.0 / s.n;
    let single = compensated(s.ks.iter().zip(&s.cs).map(|(k, c)| c * tpi(&[*k, *k, l, m])));
    let diag = double_sum(&s, |k, kp| tpi(&[k, k, kp, kp, l, l, m, m])) / s.n;
    Ok(SDecomposition {
        s11: w * single * single,
        s12: diag,
        s21: w * double_sum(&s, |k, kp| {
            let a = tpi(&[k, kp, l, l]);
            if a == 0.0 {
                0.0
            } else {
                a * tpi(&[k, kp, m, m])
            }
        }),
        s22: diag,
        s31: w * double_sum(&s, |k, kp| tpi(&[k, kp, l, m]).powi(2)),
        s32: diag,
    })
}

/// `S₁` for `l ≠ m` using `Σ_k c_k e_k² ≡ Σ_k c_k` (pairs `±k` share `c_k`
/// and `e_k² + e_{−k}² = 2`), which reduces both parts to single sums and
/// reaches cutoffs beyond the double-sum budget.
pub fn s1_term(l: WaveVector, m: WaveVector, n: u32, nv: usize) -> Result<f64> {
    if l == m {
        return Err(Error::invalid("modes", "S₁ is defined for l ≠ m"));
    }
    let s = r_setup(l, m, n, nv, usize::MAX)?;
    let w = 1.0 - 1.0 / s.n;
    let single = compensated(s.ks.iter().zip(&s.cs).map(|(k, c)| c * tpi(&[*k, *k, l, m])));
    let csum = compensated(s.cs.iter().copied());
    Ok(w * single * single + csum * csum * tpi(&[l, l, m, m]) / s.n)
}

/// `J`-terms for `l = m`.
pub fn j_decomposition(l: WaveVector, n: u32, nv: usize, budget: usize) -> Result<JDecomposition> {
    let s = r_setup(l, l, n, nv, budget)?;
    let w = 1.0 - 1.0 / s.n;
    let inv = 1.0 / s.n;
    let quartic = |k: WaveVector, kp: WaveVector| tpi(&[k, k, kp, kp, l, l, l, l]);
    Ok(JDecomposition {
        j1: double_sum(&s, |k, kp| w * tpi(&[k, k, l, l]) * tpi(&[kp, kp, l, l]) + inv * quartic(k, kp)),
        j2: double_sum(&s, |k, kp| 2.0 * w * tpi(&[k, kp, l, l]).powi(2) + 2.0 * inv * quartic(k, kp)),
        c_sum: compensated(s.cs.iter().copied()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: WaveVector = WaveVector::of(1, 0);
    const B: WaveVector = WaveVector::of(0, 1);

    #[test]
    fn partitions_are_bell_number() {
        let p = partitions_of_four();
        assert_eq!(p.len(), 15);
        let mut q = p.clone();
        q.sort();
        q.dedup();
        assert_eq!(q.len(), 15);
    }

    #[test]
    fn isserlis_pairing_matches_enumeration() {
        // E ξ_r ξ_s ξ_r' ξ_s' over 4-index tuples from {0,1,2}.
        for r in 0..3usize {
            for s in 0..3usize {
                for rp in 0..3usize {
                    for sp in 0..3usize {
                        let idx = [r, s, rp, sp];
                        let brute: f64 = (0..3)
                            .map(|v| normal_moment(idx.iter().filter(|&&i| i == v).count()))
                            .product();
                        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let wick = d(r, s) * d(rp, sp) + d(r, rp) * d(s, sp) + d(r, sp) * d(s, rp);
                        assert_eq!(brute, wick, "{idx:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_kernel_gives_three() {
        for n in [1, 2, 4, 7, 100] {
            let v = exact_second_moment(&SymmetricKernelSpec::constant(1.0), n).unwrap();
            assert!((v - 3.0).abs() < 1e-15, "{n}: {v}");
        }
    }

    #[test]
    fn rank_one_value_and_homogeneity() {
        let f = SymmetricKernelSpec::rank_one(A);
        for n in [1, 4, 16] {
            let v = exact_second_moment(&f, n).unwrap();
            assert!((v - (3.0 + 1.5 / n as f64)).abs() < 1e-14);
            let v2 = exact_second_moment(&f.scaled(2.0), n).unwrap();
            assert_eq!(v2, 4.0 * v);
        }
    }

    #[test]
    fn formula_agrees_with_direct_enumeration() {
        let kernels = vec![
            SymmetricKernelSpec::constant(0.7),
            SymmetricKernelSpec::rank_one(A),
            SymmetricKernelSpec::symmetrize(vec![
                SeparableTerm::new(1.0, vec![A, B], vec![A]),
                SeparableTerm::new(-0.5, vec![WaveVector::of(1, 1)], vec![WaveVector::of(-1, 1)]),
                SeparableTerm::new(0.3, vec![], vec![B, B]),
            ])
            .unwrap(),
            SymmetricKernelSpec::h_phi(A, 2).unwrap(),
        ];
        for f in &kernels {
            assert!(f.is_symmetric());
            for n in [1, 3, 8] {
                let a = exact_second_moment(f, n).unwrap();
                let b = direct_second_moment(f, n).unwrap();
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn h_phi_spec_matches_pointwise_kernel() {
        use crate::kernel::{h_phi_eval, Kernel, KernelConfig};
        let k = Kernel::new(KernelConfig::truncated(3)).unwrap();
        let l = WaveVector::of(1, 2);
        let spec = SymmetricKernelSpec::h_phi(l, 3).unwrap();
        for (x, y) in [([0.1, 0.7], [0.4, 0.2]), ([0.9, 0.05], [0.33, 0.61])] {
            let a = spec.eval(x, y);
            let b = h_phi_eval(&k, l, x, y);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn fourfold_moment_matches_pairing_formula() {
        let fs: [&[WaveVector]; 4] = [&[A, B], &[A], &[WaveVector::of(1, 1), B], &[WaveVector::of(1, -1)]];
        for n in [1usize, 2, 5] {
            let nf = n as f64;
            let i = |p: &[&[WaveVector]]| tpi(&cat(p));
            let want = (1.0 - 1.0 / nf)
                * (i(&[fs[0], fs[1]]) * i(&[fs[2], fs[3]])
                    + i(&[fs[0], fs[2]]) * i(&[fs[1], fs[3]])
                    + i(&[fs[0], fs[3]]) * i(&[fs[1], fs[2]]))
                + 3.0 / nf * i(&fs);
            assert!((fourfold_moment(fs, n).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn r_paths_agree() {
        let pairs = [(A, B), (A, A), (WaveVector::of(1, 1), WaveVector::of(2, -1)), (WaveVector::of(1, 1), WaveVector::of(1, 1))];
        for (l, m) in pairs {
            for (n, nv) in [(2, 4), (4, 4), (5, 9)] {
                let g = exact_r_second_moment_with(l, m, n, nv, usize::MAX, RPath::Generic).unwrap();
                let d = exact_r_second_moment_with(l, m, n, nv, usize::MAX, RPath::Decomposed).unwrap();
                assert!((g - d).abs() < 1e-10 * (1.0 + g.abs()), "{l} {m} {n}: {g} vs {d}");
                assert!(g >= 0.0);
                assert!(exact_r_mean(l, m, n, nv).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn s11_vanishes_for_distinct_modes() {
        let s = s_decomposition(A, WaveVector::of(1, 1), 6, 8, usize::MAX).unwrap();
        assert!(s.s11.abs() < 1e-20);
        let s1 = s1_term(A, WaveVector::of(1, 1), 6, 8).unwrap();
        assert!((s1 - s.s1()).abs() < 1e-10 * (1.0 + s1.abs()));
    }

    #[test]
    fn c_sum_matches_closed_form() {
        for n in [1, 4, 9] {
            let j = j_decomposition(A, n, 4, usize::MAX).unwrap();
            let eps = eps_n(n).unwrap();
            assert!((j.c_sum - 0.5 / (eps * eps)).abs() < 1e-10);
        }
    }

    #[test]
    fn budget_is_enforced() {
        match exact_r_second_moment_with(A, B, 8, 8, 100, RPath::Generic) {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(budget, 100);
                assert_eq!(required, lambda_set(8).len().pow(2));
            }
            other => panic!("{other:?}"),
        }
        assert!(exact_r_second_moment(A, B, 17, 8).is_err());
    }

    #[test]
    fn term_size_is_limited() {
        let t = SeparableTerm::new(1.0, vec![A, A, A], vec![B, B]);
        assert!(SymmetricKernelSpec::symmetrize(vec![t]).is_err());
    }
}
