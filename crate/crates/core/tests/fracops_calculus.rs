use std::f64::consts::PI;

use fracspec::fracops::{
    balakrishnan_multiplier, comparison_principle_suite, frac_power_balakrishnan,
    frac_power_spectral, heat, heat_kernel, maximum_principle_suite, neg_frac_power,
    BalakrishnanQuad, FracParams, ZeroModePolicy,
};
use fracspec::specfun::gamma;
use fracspec::specfun::quadrature::composite_legendre;
use fracspec::spectra::{make_system, Coefficients, FdSpec, Field, SpectralSystem, SystemKind, Truncation};
use fracspec::Error;
use proptest::prelude::*;

fn sys(kind: SystemKind, modes: usize) -> SpectralSystem {
    make_system(kind, Truncation::modes(modes)).unwrap()
}

fn dirichlet(modes: usize) -> SpectralSystem {
    sys(SystemKind::DirichletInterval { a: 0.0, b: PI }, modes)
}

#[test]
fn heat_semigroup_basics() {
    let s = dirichlet(32);
    let f = s.analyze(|x| x[0] * (PI - x[0]) * (1.0 + x[0].sin()));
    assert_eq!(heat(&s, &f, 0.0).unwrap().values, f.values);
    let a = heat(&s, &heat(&s, &f, 0.3).unwrap(), 0.45).unwrap();
    let b = heat(&s, &f, 0.75).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 1e-15 * (1.0 + y.abs()));
    }
    let e = heat(&s, &s.unit(2), 0.2).unwrap();
    assert!((e.values[2] - (-0.2 * 9.0f64).exp()).abs() < 1e-15);
    let mut last = f64::INFINITY;
    for i in 0..20 {
        let n = s.norm_sq(&heat(&s, &f, 0.1 * i as f64).unwrap());
        assert!(n <= last);
        last = n;
    }
    assert!(heat(&s, &f, -1.0).is_err());
}

#[test]
fn spectral_power_examples() {
    let s = dirichlet(16);
    let f = s.unit(1); // √(2/π) sin 2x
    for &sigma in &[0.1, 0.5, 0.9] {
        let g = frac_power_spectral(&s, &f, sigma).unwrap();
        assert!((g.values[1] - 4f64.powf(sigma)).abs() < 1e-14);
    }
    let r = s.analyze(|x| (3.0 * x[0]).sin() * x[0]);
    let half = frac_power_spectral(&s, &frac_power_spectral(&s, &r, 0.5).unwrap(), 0.5).unwrap();
    for (k, (&h, &c)) in half.values.iter().zip(&r.values).enumerate() {
        assert!((h - s.eigenvalues()[k] * c).abs() < 1e-12 * (1.0 + c.abs()));
    }
    // zero mode: the shifted Hermite operator has λ₀ = 0
    let hs = sys(SystemKind::HermiteShifted { d: vec![1.0] }, 8);
    assert_eq!(frac_power_spectral(&hs, &hs.unit(0), 0.3).unwrap().values[0], 0.0);
    assert_eq!(frac_power_balakrishnan(&hs, &hs.unit(0), &FracParams::new(0.3).unwrap()).unwrap().values[0], 0.0);
    assert!(frac_power_spectral(&s, &f, 1.0).is_err());
    assert!(FracParams::new(0.0).is_err());
}

#[test]
fn balakrishnan_single_mode_against_fine_oracle() {
    // Oracle: (1/Γ(−1/2)) ∫ (e^{−t} − 1) t^{−3/2} dt by a dense midpoint sum in u = √t
    // (t = u², dt = 2u du, integrand 2(e^{−u²} − 1)/u², smooth at 0) on [0, 60].
    let n = 600_000;
    let h = 60.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let u: f64 = (i as f64 + 0.5) * h;
        acc += 2.0 * (-(u * u)).exp_m1() / (u * u) * h;
    }
    acc -= 2.0 / 60.0; // ∫_{3600}^∞ −t^{−3/2} dt
    let oracle = acc / gamma(-0.5).unwrap();
    assert!((oracle - 1.0).abs() < 1e-8, "oracle {oracle}");
    let m = balakrishnan_multiplier(1.0, 0.5, &BalakrishnanQuad::default()).unwrap();
    assert!((m - oracle).abs() < 1e-8);
}

fn random_smooth(s: &SpectralSystem, seed: u64) -> Coefficients {
    // a smooth random profile, built directly as rapidly decaying coefficients
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let vals = (0..s.len())
        .map(|k| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            u * (-0.15 * k as f64).exp()
        })
        .collect();
    Coefficients::from_values(vals)
}

#[test]
fn routes_agree_across_catalog() {
    let systems = vec![
        dirichlet(64),
        sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 64),
        sys(SystemKind::HermiteShifted { d: vec![1.0] }, 64),
        sys(SystemKind::OrnsteinUhlenbeck { d: vec![1.0], rotation: None }, 64),
        sys(SystemKind::LaguerrePhi { alpha: vec![0.5] }, 64),
        sys(SystemKind::LaguerreEll { alpha: vec![0.5] }, 64),
        sys(SystemKind::LaguerrePsi { alpha: vec![0.5] }, 64),
        sys(SystemKind::LaguerreCalL { alpha: vec![0.5] }, 64),
        sys(SystemKind::LaguerrePolynomial { alpha: vec![0.5] }, 64),
        sys(SystemKind::UltrasphericalL { lambda: 1.5 }, 64),
        sys(SystemKind::UltrasphericalTrig { lambda: 1.5 }, 64),
        sys(SystemKind::DivergenceFormFd(FdSpec::uniform(0.0, 1.0, 80)), 64),
    ];
    for s in &systems {
        let f = random_smooth(s, 7);
        for &sigma in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            let a = frac_power_spectral(s, &f, sigma).unwrap();
            let b = frac_power_balakrishnan(s, &f, &FracParams::new(sigma).unwrap()).unwrap();
            let err = s.relative_distance(&b, &a);
            assert!(err <= 1e-6, "{:?} σ={sigma}: {err}", s.kind());
        }
    }
}

#[test]
fn balakrishnan_self_test_flags_coarse_quadrature() {
    let s = dirichlet(64);
    let mut p = FracParams::new(0.5).unwrap();
    p.quad.panels = 2;
    p.quad.per_panel = 3;
    match frac_power_balakrishnan(&s, &s.unit(10), &p) {
        Err(Error::Tolerance { .. }) => {}
        other => panic!("expected a tolerance error, got {other:?}"),
    }
}

#[test]
fn negative_power_and_zero_modes() {
    let s = dirichlet(32);
    let g = s.analyze(|x| (x[0] * (PI - x[0])).powi(2));
    for &sigma in &[0.25, 0.6] {
        let f = neg_frac_power(&s, &g, sigma, ZeroModePolicy::Error).unwrap();
        let back = frac_power_spectral(&s, &f, sigma).unwrap();
        assert!(s.relative_distance(&back, &g) < 1e-14);
        let e = neg_frac_power(&s, &s.unit(4), sigma, ZeroModePolicy::Error).unwrap();
        assert!((e.values[4] - 25f64.powf(-sigma)).abs() < 1e-15);
    }
    let hs = sys(SystemKind::HermiteShifted { d: vec![1.0] }, 8);
    let c = Coefficients::from_values(vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(matches!(neg_frac_power(&hs, &c, 0.5, ZeroModePolicy::Error), Err(Error::ZeroMode(0))));
    let dropped = neg_frac_power(&hs, &c, 0.5, ZeroModePolicy::Drop).unwrap();
    assert_eq!(dropped.values[0], 0.0);
    assert!((dropped.values[1] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn negative_power_preserves_positivity_and_matches_subordination() {
    let s = dirichlet(64);
    let bump = |t: f64| if t.abs() < 1.0 { (1.0 - t * t).powi(4) } else { 0.0 };
    let g = s.analyze(|x| bump((x[0] - 2.2) / 0.5));
    // subordination oracle: λ^{−σ} = (1/Γ(σ)) ∫₀^∞ t^{σ−1} e^{−tλ} dt, on t = e^u
    let rule = composite_legendre(-400.0, 8.0, 400, 16);
    let grid: Vec<Vec<f64>> = (1..200).map(|i| vec![PI * i as f64 / 200.0]).collect();
    for &sigma in &[0.1, 0.25, 0.5, 0.75, 0.9] {
        let f = neg_frac_power(&s, &g, sigma, ZeroModePolicy::Error).unwrap();
        let oracle = g.map(|k, c| {
            let l = s.eigenvalues()[k];
            let m: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&u, &w)| w * (sigma * u - l * u.exp()).exp())
                .sum();
            c * m / gamma(sigma).unwrap()
        });
        assert!(s.relative_distance(&oracle, &f) < 1e-10, "σ={sigma}");
        let vals = s.synthesize(&f, &grid).unwrap();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-8, "σ={sigma}: min {min}");
    }
}

#[test]
fn heat_kernels_are_nonnegative() {
    let cases = [
        (sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 300), -3.0, 3.0),
        (dirichlet(128), 0.02, PI - 0.02),
    ];
    for (s, lo, hi) in &cases {
        let grid: Vec<f64> = (0..=40).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect();
        for &t in &[0.05, 0.2, 1.0] {
            let mut min = f64::INFINITY;
            for &x in &grid {
                for &y in &grid {
                    min = min.min(heat_kernel(s, t, &[x], &[y]).unwrap());
                }
            }
            assert!(min >= -1e-8, "{:?} t={t}: {min}", s.kind());
        }
    }
}

fn positivity_catalog() -> Vec<SpectralSystem> {
    let mut v: Vec<SpectralSystem> = SystemKind::examples()
        .into_iter()
        .map(|k| {
            let modes = match &k {
                SystemKind::DivergenceFormFd(spec) => spec.nodes.iter().product(),
                _ => 48,
            };
            make_system(k, Truncation::modes(modes)).unwrap()
        })
        .collect();
    let mut spec = FdSpec::uniform(-1.0, 2.0, 60);
    let full = spec.full_points();
    spec.a = Field::Samples(full.iter().map(|p| 1.0 + 0.5 * (3.0 * p[0]).sin()).collect());
    spec.v = Field::Samples(full.iter().map(|p| p[0] * p[0]).collect());
    spec.mu = 2.0;
    v.push(make_system(SystemKind::DivergenceFormFd(spec), Truncation::modes(60)).unwrap());
    v
}

#[test]
fn maximum_and_comparison_principles() {
    for s in positivity_catalog() {
        for &sigma in &[0.2, 0.5, 0.8] {
            let r = maximum_principle_suite(&s, sigma, 50, 11, 1e-6).unwrap();
            assert_eq!(r.violations, 0, "{r:?}");
            let c = comparison_principle_suite(&s, sigma, 50, 12, 1e-6).unwrap();
            assert_eq!(c.violations, 0, "{c:?}");
        }
    }
}

#[test]
fn principle_suites_are_deterministic() {
    let s = dirichlet(32);
    let a = maximum_principle_suite(&s, 0.4, 20, 3, 1e-6).unwrap();
    let b = maximum_principle_suite(&s, 0.4, 20, 3, 1e-6).unwrap();
    assert_eq!(a.worst.to_bits(), b.worst.to_bits());
}

proptest! {
    #[test]
    fn multiplier_identity(lambda in 1e-3f64..1e5, sigma in 0.02f64..0.98) {
        let m = balakrishnan_multiplier(lambda, sigma, &BalakrishnanQuad::default()).unwrap();
        prop_assert!(((m - lambda.powf(sigma)) / lambda.powf(sigma)).abs() < 1e-9);
    }

    #[test]
    fn heat_contracts(t in 0.0f64..5.0, seed in 0u64..1000) {
        let s = dirichlet(16);
        let f = random_smooth(&s, seed);
        prop_assert!(s.norm_sq(&heat(&s, &f, t).unwrap()) <= s.norm_sq(&f));
    }
}
