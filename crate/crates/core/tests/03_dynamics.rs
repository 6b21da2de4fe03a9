use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortexnoise::basis::SpectralCutoff;
use vortexnoise::dynamics::{interaction_energy, sample_initial, Integrator, NoiseConfig, Stepper, VortexState};
use vortexnoise::kernel::{Kernel, KernelConfig};
use vortexnoise::rng::{self, Purpose};
use vortexnoise::stats::{combined_se, Estimate};

fn deterministic_energy_drift(integrator: Integrator, state: VortexState, steps: usize, dt: f64) -> f64 {
    let k = Kernel::new(KernelConfig::exact()).unwrap();
    let noise = NoiseConfig::new(SpectralCutoff::new(4).unwrap(), 0, dt).unwrap().without_noise();
    let mut st = Stepper::new(&k, noise, integrator, 0);
    let mut s = state;
    let e0 = interaction_energy(&s);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        st.advance(&mut s);
        worst = worst.max((interaction_energy(&s) - e0).abs());
    }
    worst / e0.abs().max(1e-12)
}

#[test]
fn heun_conserves_two_vortex_energy() {
    let s = VortexState::new(vec![1.0, -0.7], vec![[0.3, 0.4], [0.55, 0.48]]).unwrap();
    let d = deterministic_energy_drift(Integrator::Heun, s, 2000, 1e-4);
    assert!(d < 1e-4, "relative drift {d}");
}

#[test]
fn heun_conserves_few_vortex_energy() {
    let s = VortexState::new(
        vec![0.8, -1.1, 0.5, 1.3],
        vec![[0.1, 0.2], [0.6, 0.3], [0.35, 0.8], [0.8, 0.75]],
    )
    .unwrap();
    let d = deterministic_energy_drift(Integrator::Heun, s, 1000, 1e-4);
    assert!(d < 1e-4, "relative drift {d}");
}

fn single_vortex_msd(integrator: Integrator, seed: u64, runs: u64, steps: u64, dt: f64) -> (Estimate, Estimate) {
    let k = Kernel::new(KernelConfig::exact()).unwrap();
    let noise = NoiseConfig::new(SpectralCutoff::new(8).unwrap(), seed, dt).unwrap();
    let mut dx = Vec::new();
    let mut dy = Vec::new();
    for run in 0..runs {
        let mut r = rng::stream(seed, run, Purpose::ParticleInit, 0);
        let mut s = VortexState::new(vec![1.0], vec![[r.random(), r.random()]]).unwrap();
        let mut st = Stepper::new(&k, noise.clone(), integrator, run);
        for _ in 0..steps {
            st.advance(&mut s);
        }
        let d = s.travel()[0];
        dx.push(d[0] * d[0]);
        dy.push(d[1] * d[1]);
    }
    (Estimate::of(&dx), Estimate::of(&dy))
}

#[test]
fn single_vortex_is_isotropic_with_unit_diffusivity() {
    let t = 0.005;
    let (x, y) = single_vortex_msd(Integrator::EulerMaruyama, 11, 4000, 50, 1e-4);
    assert!(x.within(2.0 * t, 3.0), "{x:?}");
    assert!(y.within(2.0 * t, 3.0), "{y:?}");
}

#[test]
fn heun_and_euler_agree_on_diffusivity() {
    let (ex, ey) = single_vortex_msd(Integrator::EulerMaruyama, 21, 3000, 50, 1e-4);
    let (hx, hy) = single_vortex_msd(Integrator::Heun, 22, 3000, 50, 1e-4);
    let e = ex.mean + ey.mean;
    let h = hx.mean + hy.mean;
    let se = combined_se(combined_se(ex.se, ey.se), combined_se(hx.se, hy.se));
    assert!((e - h).abs() < 2.0 * se + 1e-12, "{e} vs {h} (se {se})");
}

/// Zero-intensity vortices feel only the common noise field, so nearby
/// vortices move together and distant ones almost independently.
#[test]
fn noise_is_spatially_correlated() {
    let k = Kernel::new(KernelConfig::exact()).unwrap();
    let noise = NoiseConfig::new(SpectralCutoff::new(8).unwrap(), 5, 1e-3).unwrap();
    let corr = |sep: f64| {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for run in 0..3000 {
            let mut s = VortexState::new(vec![0.0, 0.0], vec![[0.2, 0.3], [0.2 + sep, 0.3]]).unwrap();
            let mut st = Stepper::new(&k, noise.clone(), Integrator::EulerMaruyama, run);
            st.advance(&mut s);
            a.push(s.travel()[0][0]);
            b.push(s.travel()[1][0]);
        }
        let n = a.len() as f64;
        let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n;
        let aa: f64 = a.iter().map(|x| x * x).sum::<f64>() / n;
        let bb: f64 = b.iter().map(|x| x * x).sum::<f64>() / n;
        ab / (aa * bb).sqrt()
    };
    let near = corr(0.005);
    let far = corr(0.37);
    assert!(near > 0.95, "{near}");
    assert!(far.abs() < 0.3, "{far}");
}

#[test]
fn initial_law_has_uniform_positions_and_normal_intensities() {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let mut xs = Vec::new();
    let mut xi2 = Vec::new();
    for _ in 0..400 {
        let s = sample_initial(25, &mut r).unwrap();
        xs.extend(s.positions().iter().map(|p| p[0]));
        xi2.extend(s.intensities().iter().map(|v| v * v));
    }
    let x = Estimate::of(&xs);
    let v = Estimate::of(&xi2);
    assert!(x.within(0.5, 3.0), "{x:?}");
    assert!((x.variance - 1.0 / 12.0).abs() < 0.005);
    assert!(v.within(1.0, 3.0), "{v:?}");
    assert!(xs.iter().all(|p| (0.0..1.0).contains(p)));
}
