//! Functionals of the empirical vorticity `ω^N = N^{-1/2} Σ_i ξ_i δ_{X_i}`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::basis::{c_coeff, grad_e_k, lambda_set, WaveVector};
use crate::dynamics::VortexState;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::kernel::{powers, Kernel};
use crate::torus::{displacement, Point};

/// Evaluates `e_k(x)` for a fixed list of wave vectors through complex powers.
#[derive(Clone, Debug)]
pub struct ModeTable {
    modes: Vec<WaveVector>,
    reach: i32,
}

impl ModeTable {
    pub fn new(modes: Vec<WaveVector>) -> Self {
        let reach = modes
            .iter()
            .map(|k| k.k1.abs().max(k.k2.abs()))
            .max()
            .unwrap_or(0);
        Self { modes, reach }
    }

    pub fn modes(&self) -> &[WaveVector] {
        &self.modes
    }

    pub fn eval_into(&self, x: Point, out: &mut [f64]) {
        let r = self.reach;
        let z1 = powers(Complex64::from_polar(1.0, 2.0 * PI * x[0]), -r, r);
        let z2 = powers(Complex64::from_polar(1.0, 2.0 * PI * x[1]), -r, r);
        for (k, o) in self.modes.iter().zip(out.iter_mut()) {
            let z = z1[(k.k1 + r) as usize] * z2[(k.k2 + r) as usize];
            *o = SQRT_2 * if k.is_positive() { z.re } else { z.im };
        }
    }

    pub fn eval(&self, x: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.modes.len()];
        self.eval_into(x, &mut out);
        out
    }
}

/// `⟨ω^N, e_l⟩ = N^{-1/2} Σ_i ξ_i e_l(X_i)`.
pub fn pair(state: &VortexState, l: WaveVector) -> f64 {
    let s: f64 = state
        .intensities()
        .iter()
        .zip(state.positions())
        .map(|(xi, x)| xi * crate::basis::e_k(l, *x))
        .sum();
    s / (state.len() as f64).sqrt()
}

/// All pairings over `Λ_M`.
pub fn spectral_coeffs(state: &VortexState, m: u32) -> Result<SpectralField> {
    let mut field = SpectralField::zeros(m)?;
    let table = ModeTable::new(lambda_set(m));
    let mut buf = vec![0.0; table.modes().len()];
    let scale = 1.0 / (state.len() as f64).sqrt();
    let coeffs = field.coeffs_mut();
    for (xi, x) in state.intensities().iter().zip(state.positions()) {
        table.eval_into(*x, &mut buf);
        for (c, e) in coeffs.iter_mut().zip(&buf) {
            *c += xi * e;
        }
    }
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(field)
}

/// `(Σ_l (1+|l|²)^{−s} ω̂_l²)^{1/2}` over the field's modes.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid("s", "Sobolev index must be positive"));
    }
    Ok(field
        .iter()
        .map(|(l, c)| (1.0 + l.norm_sq() as f64).powf(-s) * c * c)
        .sum::<f64>()
        .sqrt())
}

/// `⟨ω⊗ω, H_{e_l}⟩ = (1/N) Σ_{r≠s} ξ_r ξ_s H_{e_l}(X_r, X_s)` for each `l`.
pub fn quadratic_forms(kernel: &Kernel, state: &VortexState, ls: &[WaveVector]) -> Vec<f64> {
    let pos = state.positions();
    let xi = state.intensities();
    let grads: Vec<Vec<[f64; 2]>> = pos
        .iter()
        .map(|x| ls.iter().map(|l| grad_e_k(*l, *x)).collect())
        .collect();
    let mut out = vec![0.0; ls.len()];
    for r in 0..pos.len() {
        for s in r + 1..pos.len() {
            if pos[r] == pos[s] {
                continue;
            }
            let k = kernel.eval(displacement(pos[r], pos[s]));
            let w = xi[r] * xi[s];
            for (o, (gr, gs)) in out.iter_mut().zip(grads[r].iter().zip(&grads[s])) {
                *o += w * (k[0] * (gr[0] - gs[0]) + k[1] * (gr[1] - gs[1]));
            }
        }
    }
    // Each unordered pair appears twice with weight ½.
    let scale = 1.0 / pos.len() as f64;
    out.iter_mut().for_each(|o| *o *= scale);
    out
}

pub fn quadratic_form(kernel: &Kernel, state: &VortexState, l: WaveVector) -> f64 {
    quadratic_forms(kernel, state, &[l])[0]
}

/// `R_{l,m}(ω) = Σ_{k∈Λ_n} C_{k,l} C_{k,m} (⟨ω, e_k e_l⟩⟨ω, e_k e_m⟩ − δ_{l,m})`.
pub fn r_statistic(state: &VortexState, l: WaveVector, m: WaveVector, n: u32) -> Result<f64> {
    let lambda = lambda_set(n);
    if lambda.is_empty() {
        return Err(Error::invalid("n", "noise cutoff must be at least 1"));
    }
    let table = ModeTable::new(lambda.clone());
    let mut ek = vec![0.0; lambda.len()];
    let mut a = vec![0.0; lambda.len()];
    let mut b = vec![0.0; lambda.len()];
    for (xi, x) in state.intensities().iter().zip(state.positions()) {
        table.eval_into(*x, &mut ek);
        let el = xi * crate::basis::e_k(l, *x);
        let em = xi * crate::basis::e_k(m, *x);
        for i in 0..lambda.len() {
            a[i] += ek[i] * el;
            b[i] += ek[i] * em;
        }
    }
    let inv_n = 1.0 / state.len() as f64;
    let delta = if l == m { 1.0 } else { 0.0 };
    Ok(lambda
        .iter()
        .enumerate()
        .map(|(i, k)| c_coeff(*k, l) * c_coeff(*k, m) * (a[i] * b[i] * inv_n - delta))
        .sum())
}

/// A function of finitely many spectral coordinates `v_l = ⟨ω, e_l⟩`.
pub trait CylindricalFunction {
    fn modes(&self) -> &[WaveVector];
    fn value(&self, v: &[f64]) -> f64;
    fn gradient(&self, v: &[f64]) -> Vec<f64>;
    fn hessian(&self, v: &[f64]) -> Vec<Vec<f64>>;
}

/// `f(v) = v_l`.
#[derive(Clone, Debug)]
pub struct Coordinate(pub [WaveVector; 1]);

impl Coordinate {
    pub fn new(l: WaveVector) -> Self {
        Self([l])
    }
}

impl CylindricalFunction for Coordinate {
    fn modes(&self) -> &[WaveVector] {
        &self.0
    }
    fn value(&self, v: &[f64]) -> f64 {
        v[0]
    }
    fn gradient(&self, _: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
    fn hessian(&self, _: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }
}

/// `f(v) = v_l²`.
#[derive(Clone, Debug)]
pub struct Square(pub [WaveVector; 1]);

impl Square {
    pub fn new(l: WaveVector) -> Self {
        Self([l])
    }
}

impl CylindricalFunction for Square {
    fn modes(&self) -> &[WaveVector] {
        &self.0
    }
    fn value(&self, v: &[f64]) -> f64 {
        v[0] * v[0]
    }
    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        vec![2.0 * v[0]]
    }
    fn hessian(&self, _: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![2.0]]
    }
}

/// `f(v) = v_l v_m` with `l ≠ m`.
#[derive(Clone, Debug)]
pub struct Product(pub [WaveVector; 2]);

impl Product {
    pub fn new(l: WaveVector, m: WaveVector) -> Result<Self> {
        if l == m {
            return Err(Error::invalid("modes", "use Square for a repeated mode"));
        }
        Ok(Self([l, m]))
    }
}

impl CylindricalFunction for Product {
    fn modes(&self) -> &[WaveVector] {
        &self.0
    }
    fn value(&self, v: &[f64]) -> f64 {
        v[0] * v[1]
    }
    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        vec![v[1], v[0]]
    }
    fn hessian(&self, _: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0], vec![1.0, 0.0]]
    }
}

/// `f(v) = cos(Σ_j a_j v_j)`, bounded with bounded derivatives.
#[derive(Clone, Debug)]
pub struct Cosine {
    modes: Vec<WaveVector>,
    weights: Vec<f64>,
}

impl Cosine {
    pub fn new(modes: Vec<WaveVector>, weights: Vec<f64>) -> Result<Self> {
        if modes.len() != weights.len() || modes.is_empty() {
            return Err(Error::Mismatch("one weight per mode required".into()));
        }
        Ok(Self { modes, weights })
    }

    fn phase(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(a, x)| a * x).sum()
    }
}

impl CylindricalFunction for Cosine {
    fn modes(&self) -> &[WaveVector] {
        &self.modes
    }
    fn value(&self, v: &[f64]) -> f64 {
        self.phase(v).cos()
    }
    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let s = -self.phase(v).sin();
        self.weights.iter().map(|a| a * s).collect()
    }
    fn hessian(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let c = -self.phase(v).cos();
        self.weights
            .iter()
            .map(|a| self.weights.iter().map(|b| a * b * c).collect())
            .collect()
    }
}

/// Largest discrepancy between supplied and central-difference derivatives,
/// relative to `1 + |exact|`.
pub fn derivative_check(f: &dyn CylindricalFunction, v: &[f64], h: f64) -> f64 {
    let n = v.len();
    let g = f.gradient(v);
    let hs = f.hessian(v);
    let mut worst: f64 = 0.0;
    let mut p = v.to_vec();
    for i in 0..n {
        p[i] = v[i] + h;
        let fp = f.value(&p);
        let gp = f.gradient(&p);
        p[i] = v[i] - h;
        let fm = f.value(&p);
        let gm = f.gradient(&p);
        p[i] = v[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
        for j in 0..n {
            let hd = (gp[j] - gm[j]) / (2.0 * h);
            worst = worst.max((hd - hs[j][i]).abs() / (1.0 + hs[j][i].abs()));
        }
    }
    worst
}

/// Source of the transport term `⟨ω⊗ω, H_{e_l}⟩` in the generator.
pub enum Transport<'a> {
    /// Computed from particle positions.
    Particles {
        kernel: &'a Kernel,
        state: &'a VortexState,
    },
    /// Supplied per mode, e.g. the Galerkin nonlinearity.
    Spectral(&'a SpectralField),
    /// Drop the transport term.
    Off,
}

/// `L F = 4π² Σ_l |l|² [f_{l,l} − f_l ω̂_l] + Σ_l f_l Q_l`.
pub fn generator_apply(
    f: &dyn CylindricalFunction,
    field: &SpectralField,
    transport: Transport<'_>,
) -> Result<f64> {
    let modes = f.modes();
    let v: Vec<f64> = modes
        .iter()
        .map(|l| {
            field.get(*l).map_err(|_| Error::OutsideCutoff {
                mode: *l,
                cutoff: field.cutoff(),
            })
        })
        .collect::<Result<_>>()?;
    let g = f.gradient(&v);
    let h = f.hessian(&v);
    let mut out = 0.0;
    for (i, l) in modes.iter().enumerate() {
        out += 4.0 * PI * PI * l.norm_sq() as f64 * (h[i][i] - g[i] * v[i]);
    }
    let q: Vec<f64> = match transport {
        Transport::Particles { kernel, state } => quadratic_forms(kernel, state, modes),
        Transport::Spectral(b) => modes.iter().map(|l| b.get(*l)).collect::<Result<_>>()?,
        Transport::Off => vec![0.0; modes.len()],
    };
    out += g.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
    Ok(out)
}

/// Time series sink for `t,name,value` rows.
pub fn write_observable_header<W: std::io::Write>(w: &mut W) -> std::io::Result<()> {
    writeln!(w, "t,name,value")
}

pub fn write_observable_row<W: std::io::Write>(
    w: &mut W,
    t: f64,
    name: &str,
    value: f64,
) -> std::io::Result<()> {
    writeln!(w, "{t},{name},{value}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::e_k;
    use crate::dynamics::sample_initial;
    use crate::kernel::{h_phi_eval, KernelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const L10: WaveVector = WaveVector::of(1, 0);

    #[test]
    fn pair_examples() {
        let s = VortexState::new(vec![1.0], vec![[0.0, 0.0]]).unwrap();
        assert!((pair(&s, L10) - SQRT_2).abs() < 1e-15);
        let s = VortexState::new(vec![0.0; 3], vec![[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]).unwrap();
        assert_eq!(pair(&s, L10), 0.0);
    }

    #[test]
    fn mode_table_matches_basis() {
        let modes = lambda_set(5);
        let t = ModeTable::new(modes.clone());
        let x = [0.377, 0.861];
        for (k, v) in modes.iter().zip(t.eval(x)) {
            assert!((v - e_k(*k, x)).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn coeffs_agree_with_pair_and_scale_linearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = sample_initial(12, &mut rng).unwrap();
        let f = spectral_coeffs(&s, 3).unwrap();
        for (l, c) in f.iter() {
            assert!((c - pair(&s, l)).abs() < 1e-12);
        }
        assert_eq!(spectral_coeffs(&s, 1).unwrap().len(), 4);
        let doubled = VortexState::new(
            s.intensities().iter().map(|x| 2.0 * x).collect(),
            s.positions().to_vec(),
        )
        .unwrap();
        let g = spectral_coeffs(&doubled, 3).unwrap();
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_examples() {
        assert_eq!(sobolev_norm(&SpectralField::zeros(3).unwrap(), 1.5).unwrap(), 0.0);
        let f = SpectralField::single_mode(2, L10, 1.0).unwrap();
        assert!((sobolev_norm(&f, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sample_initial(20, &mut rng).unwrap();
        let f = spectral_coeffs(&s, 4).unwrap();
        assert!(sobolev_norm(&f, 1.0).unwrap() >= sobolev_norm(&f, 2.0).unwrap());
    }

    #[test]
    fn quadratic_form_matches_pairwise_h() {
        let k = Kernel::new(KernelConfig::exact()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = sample_initial(9, &mut rng).unwrap();
        let l = WaveVector::of(1, 2);
        let mut want = 0.0;
        for r in 0..9 {
            for q in 0..9 {
                want += s.intensities()[r]
                    * s.intensities()[q]
                    * h_phi_eval(&k, l, s.positions()[r], s.positions()[q]);
            }
        }
        want /= 9.0;
        assert!((quadratic_form(&k, &s, l) - want).abs() < 1e-12);
        let one = VortexState::new(vec![1.3], vec![[0.2, 0.2]]).unwrap();
        assert_eq!(quadratic_form(&k, &one, l), 0.0);
    }

    #[test]
    fn r_statistic_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_initial(7, &mut rng).unwrap();
        let l = L10;
        let m = WaveVector::of(1, 1);
        for (a, b) in [(l, l), (l, m)] {
            let mut want = 0.0;
            for k in lambda_set(2) {
                let moment = |g: WaveVector| {
                    s.intensities()
                        .iter()
                        .zip(s.positions())
                        .map(|(xi, x)| xi * e_k(k, *x) * e_k(g, *x))
                        .sum::<f64>()
                        / 7f64.sqrt()
                };
                let d = if a == b { 1.0 } else { 0.0 };
                want += c_coeff(k, a) * c_coeff(k, b) * (moment(a) * moment(b) - d);
            }
            assert!((r_statistic(&s, a, b, 2).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn r_statistic_n1_uses_only_vertical_modes() {
        // For l = (1,0) only k = (0,±1) have C_{k,l} ≠ 0.
        for k in lambda_set(1) {
            let c = c_coeff(k, L10);
            if k.k1 == 0 {
                assert_eq!(c.abs(), 1.0);
            } else {
                assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn generator_on_coordinate_and_square() {
        let k = Kernel::new(KernelConfig::exact()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = sample_initial(10, &mut rng).unwrap();
        let field = spectral_coeffs(&s, 2).unwrap();
        let l = WaveVector::of(1, 1);
        let v = field.get(l).unwrap();
        let q = quadratic_form(&k, &s, l);
        let lam = 4.0 * PI * PI * 2.0;
        let lin = generator_apply(&Coordinate::new(l), &field, Transport::Particles { kernel: &k, state: &s }).unwrap();
        assert!((lin - (-lam * v + q)).abs() < 1e-10);
        let sq = generator_apply(&Square::new(l), &field, Transport::Particles { kernel: &k, state: &s }).unwrap();
        assert!((sq - (2.0 * lam * (1.0 - v * v) + 2.0 * v * q)).abs() < 1e-10);
        let far = Coordinate::new(WaveVector::of(5, 0));
        assert!(generator_apply(&far, &field, Transport::Off).is_err());
    }

    #[test]
    fn supplied_derivatives_pass_difference_check() {
        let l = L10;
        let m = WaveVector::of(0, 1);
        let fs: Vec<Box<dyn CylindricalFunction>> = vec![
            Box::new(Coordinate::new(l)),
            Box::new(Square::new(l)),
            Box::new(Product::new(l, m).unwrap()),
            Box::new(Cosine::new(vec![l, m], vec![0.7, -1.3]).unwrap()),
        ];
        for f in &fs {
            let v: Vec<f64> = (0..f.modes().len()).map(|i| 0.3 + 0.4 * i as f64).collect();
            assert!(derivative_check(f.as_ref(), &v, 1e-4) < 1e-5);
        }
    }
}
