use proptest::prelude::*;

use vortexnoise::basis::{c_coeff, e_k, trig_product_integral, WaveVector};
use vortexnoise::kernel::{h_phi_eval, Kernel, KernelConfig};
use vortexnoise::observables::{derivative_check, Cosine};
use vortexnoise::torus::{displacement, wrap_centered};
use vortexnoise::wick::{exact_second_moment, SymmetricKernelSpec};

fn wave(max: i32) -> impl Strategy<Value = WaveVector> {
    (-max..=max, -max..=max)
        .prop_filter("nonzero", |(a, b)| (*a, *b) != (0, 0))
        .prop_map(|(a, b)| WaveVector::of(a, b))
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn basis_is_orthonormal(k in wave(6), l in wave(6)) {
        let v = trig_product_integral(&[k, l]).unwrap();
        let want = if k == l { 1.0 } else { 0.0 };
        prop_assert!((v - want).abs() < 1e-14);
    }

    #[test]
    fn triple_integrals_are_symmetric(a in wave(4), b in wave(4), c in wave(4)) {
        let x = trig_product_integral(&[a, b, c]).unwrap();
        for p in [[b, a, c], [c, b, a], [a, c, b]] {
            prop_assert_eq!(x, trig_product_integral(&p).unwrap());
        }
    }

    #[test]
    fn c_coefficient_structure(k in wave(8), l in wave(8)) {
        prop_assert_eq!(c_coeff(k, k), 0.0);
        let kp = k.perp();
        let want = (kp[0] * l.k1 as f64 + kp[1] * l.k2 as f64) / k.norm_sq() as f64;
        prop_assert!((c_coeff(k, l) - want).abs() < 1e-14);
        prop_assert_eq!(c_coeff(k, -l), -c_coeff(k, l));
    }

    #[test]
    fn basis_bounded_and_parity(k in wave(10), x in point()) {
        let v = e_k(k, x);
        prop_assert!(v.abs() <= 2f64.sqrt() + 1e-15);
        let mx = [1.0 - x[0], 1.0 - x[1]];
        let w = e_k(k, mx);
        if k.is_positive() {
            prop_assert!((v - w).abs() < 1e-12);
        } else {
            prop_assert!((v + w).abs() < 1e-12);
        }
    }

    #[test]
    fn centred_wrap_range(v in -50.0f64..50.0) {
        let w = wrap_centered(v);
        prop_assert!((-0.5..0.5).contains(&w));
        prop_assert!(((v - w) - (v - w).round()).abs() < 1e-9);
    }

    #[test]
    fn kernel_is_odd(x in point(), m in 1u32..12) {
        for k in [Kernel::new(KernelConfig::exact()).unwrap(), Kernel::new(KernelConfig::truncated(m)).unwrap()] {
            let a = k.eval(x);
            let b = k.eval([-x[0], -x[1]]);
            prop_assert_eq!(a[0], -b[0]);
            prop_assert_eq!(a[1], -b[1]);
        }
    }

    #[test]
    fn h_phi_is_symmetric(x in point(), y in point(), l in wave(4)) {
        let k = Kernel::new(KernelConfig::exact()).unwrap();
        let a = h_phi_eval(&k, l, x, y);
        let b = h_phi_eval(&k, l, y, x);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!(displacement(x, y).iter().all(|d| d.abs() <= 0.5));
    }

    #[test]
    fn second_moment_is_quadratic_in_f(c in -3.0f64..3.0, n in 1usize..200, a in wave(3)) {
        let f = SymmetricKernelSpec::rank_one(a);
        let base = exact_second_moment(&f, n).unwrap();
        let scaled = exact_second_moment(&f.scaled(c), n).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-12 * (1.0 + base));
    }

    #[test]
    fn cosine_derivatives(w in proptest::collection::vec(-2.0f64..2.0, 3), v in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let f = Cosine::new(vec![WaveVector::of(1, 0), WaveVector::of(0, 1), WaveVector::of(1, 1)], w).unwrap();
        prop_assert!(derivative_check(&f, &v, 1e-5) < 1e-6);
    }
}
