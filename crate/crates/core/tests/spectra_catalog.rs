use std::f64::consts::PI;

use fracspec::spectra::{
    derivative_growth, eigen_residual, make_system, Coefficients, FdSpec, Field, Flavor,
    GridFunction, SpectralSystem, SystemKind, Truncation,
};
use proptest::prelude::*;

fn sys(kind: SystemKind, modes: usize) -> SpectralSystem {
    make_system(kind, Truncation::modes(modes)).unwrap()
}

fn discrete_catalog(modes: usize) -> Vec<SpectralSystem> {
    vec![
        sys(SystemKind::DirichletInterval { a: 0.0, b: PI }, modes),
        sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, modes),
        sys(SystemKind::HermiteShifted { d: vec![0.7] }, modes),
        sys(SystemKind::OrnsteinUhlenbeck { d: vec![1.3], rotation: None }, modes),
        sys(SystemKind::LaguerrePhi { alpha: vec![0.5] }, modes),
        sys(SystemKind::LaguerreEll { alpha: vec![0.5] }, modes),
        sys(SystemKind::LaguerrePsi { alpha: vec![-0.3] }, modes),
        sys(SystemKind::LaguerreCalL { alpha: vec![1.5] }, modes),
        sys(SystemKind::LaguerrePolynomial { alpha: vec![0.5] }, modes),
        sys(SystemKind::UltrasphericalL { lambda: 1.5 }, modes),
        sys(SystemKind::UltrasphericalTrig { lambda: 0.75 }, modes),
    ]
}

#[test]
fn catalog_spectra() {
    let d = sys(SystemKind::DirichletInterval { a: 0.0, b: PI }, 8);
    for (k, &l) in d.eigenvalues().iter().enumerate() {
        assert!((l - ((k + 1) * (k + 1)) as f64).abs() < 1e-12);
    }
    let x: f64 = 0.81;
    let v = d.eval_modes(&[x]).unwrap();
    assert!((v[2] - (2.0 / PI).sqrt() * (3.0 * x).sin()).abs() < 1e-15);

    let h = sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 8);
    assert_eq!(h.eigenvalues(), &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0]);
    let l = sys(SystemKind::LaguerrePhi { alpha: vec![0.5] }, 4);
    assert_eq!(l.eigenvalues(), &[0.75, 1.75, 2.75, 3.75]);
    for s in discrete_catalog(32) {
        assert!(s.eigenvalues().iter().all(|&l| l >= 0.0));
        assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]), "{:?}", s.kind());
        assert!(s.quadrature_points().iter().all(|p| s.density(p) > 0.0));
        assert!(s.positivity_preserving());
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let t = Truncation::default;
    assert!(make_system(SystemKind::HarmonicOscillator { d: vec![0.0] }, t()).is_err());
    assert!(make_system(SystemKind::LaguerrePhi { alpha: vec![-1.0] }, t()).is_err());
    assert!(make_system(SystemKind::UltrasphericalL { lambda: -0.1 }, t()).is_err());
    assert!(make_system(SystemKind::DirichletInterval { a: 1.0, b: 1.0 }, t()).is_err());
    assert!(make_system(SystemKind::FourierLaplacian { n: 3 }, t()).is_err());
    let mut spec = FdSpec::uniform(0.0, 1.0, 20);
    spec.v = Field::Constant(-1.0);
    let err = make_system(SystemKind::DivergenceFormFd(spec.clone()), t()).unwrap_err();
    assert!(err.to_string().contains("nonnegative"), "{err}");
    spec.v = Field::Constant(0.0);
    spec.a = Field::Constant(5.0);
    spec.mu = 2.0;
    let err = make_system(SystemKind::DivergenceFormFd(spec), t()).unwrap_err();
    assert!(err.to_string().contains("ellipticity"), "{err}");
    let rot = Some(vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
    assert!(make_system(SystemKind::OrnsteinUhlenbeck { d: vec![1.0, 2.0], rotation: rot }, t()).is_err());
}

#[test]
fn eigenfunctions_analyze_to_unit_vectors() {
    for s in discrete_catalog(40) {
        for k in [0usize, 3, 17, 39] {
            let c = s.analyze(|x| s.eval_modes(x).unwrap()[k]);
            for (j, &v) in c.values.iter().enumerate() {
                let target = if j == k { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-8, "{:?} k={k} j={j}: {v}", s.kind());
            }
        }
        let z = s.analyze(|_| 0.0);
        assert!(z.values.iter().all(|&v| v == 0.0));
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn dirichlet_parabola_matches_simpson() {
    let s = sys(SystemKind::DirichletInterval { a: 0.0, b: PI }, 64);
    let c = s.analyze(|x| x[0] * (PI - x[0]));
    for k in 1..=64usize {
        let oracle = simpson(
            |x| x * (PI - x) * (2.0 / PI).sqrt() * (k as f64 * x).sin(),
            0.0,
            PI,
            20_000,
        );
        assert!((c.values[k - 1] - oracle).abs() < 1e-8, "k={k}");
        // closed form: (2/π)^{1/2} · 2(1 − cos kπ)/k³
        let exact = (2.0 / PI).sqrt() * 2.0 * (1.0 - (k as f64 * PI).cos()) / (k as f64).powi(3);
        assert!((c.values[k - 1] - exact).abs() < 1e-12);
    }
}

#[test]
fn synthesis_round_trip_equals_projection() {
    for s in discrete_catalog(32) {
        let smooth = |x: &[f64]| (0.7 * x[0]).cos() * (-0.1 * x[0] * x[0]).exp() * x[0].abs().sqrt();
        let c = s.analyze(smooth);
        let back = s.synthesize(&c, s.quadrature_points()).unwrap();
        let c2 = s.analyze_samples(&back);
        let err = s.relative_distance(&c2, &c);
        assert!(err < 1e-8, "{:?}: {err}", s.kind());
        let e3 = s.synthesize(&s.unit(3), &[s.quadrature_points()[5].clone()]).unwrap()[0];
        let direct = s.eval_modes(&s.quadrature_points()[5]).unwrap()[3];
        assert!((e3 - direct).abs() < 1e-14);
    }
}

fn mollifier(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[test]
fn plancherel_for_compactly_supported_functions() {
    let cases: Vec<(SpectralSystem, f64, f64)> = vec![
        (sys(SystemKind::DirichletInterval { a: 0.0, b: PI }, 64), 1.5, 0.8),
        (sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 200), 0.3, 3.0),
        (sys(SystemKind::LaguerrePhi { alpha: vec![0.5] }, 200), 2.0, 1.5),
        (sys(SystemKind::UltrasphericalL { lambda: 1.5 }, 64), 1.4, 0.9),
    ];
    for (s, c, r) in cases {
        let f = |x: &[f64]| mollifier((x[0] - c) / r);
        let coeffs = s.analyze(f);
        // reference norm by a fine independent rule
        let exact = simpson(|x| f(&[x]).powi(2), c - r, c + r, 20_000);
        let got = s.norm_sq(&coeffs);
        assert!(((got - exact) / exact).abs() < 1e-6, "{:?}: {got} vs {exact}", s.kind());
    }
    let b = make_system(SystemKind::BesselS { lambda: 0.5 }, Truncation::default()).unwrap();
    let f = |x: &[f64]| mollifier((x[0] - 3.0) / 2.5);
    let exact = simpson(|x| f(&[x]).powi(2), 0.5, 5.5, 20_000);
    let got = b.norm_sq(&b.analyze(f));
    assert!(((got - exact) / exact).abs() < 1e-6, "bessel: {got} vs {exact}");
}

#[test]
fn hankel_round_trip_of_self_reciprocal_profile() {
    let s = make_system(SystemKind::BesselS { lambda: 0.5 }, Truncation::default()).unwrap();
    assert_eq!(s.flavor(), Flavor::Continuous);
    let f = |x: f64| x.sqrt() * (-x * x / 2.0).exp();
    let c = s.analyze(|x| f(x[0]));
    // the order-zero Hankel transform maps this profile to itself
    let xi: Vec<f64> = s.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let worst = xi.iter().zip(&c.values).map(|(&x, &v)| (v - f(x)).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
    let pts = s.quadrature_points().to_vec();
    let back = s.synthesize(&c, &pts).unwrap();
    let w = s.quadrature_weights();
    let err: f64 = pts.iter().zip(&back).zip(w).map(|((p, b), w)| w * (b - f(p[0])).powi(2)).sum();
    let norm: f64 = pts.iter().zip(w).map(|(p, w)| w * f(p[0]).powi(2)).sum();
    assert!((err / norm).sqrt() <= 1e-4, "{}", (err / norm).sqrt());
}

#[test]
fn fourier_realization_round_trips() {
    let s = make_system(SystemKind::FourierLaplacian { n: 1 }, Truncation::default()).unwrap();
    let f = |x: f64| (-(x - 0.4) * (x - 0.4)).exp();
    let c = s.analyze(|x| f(x[0]));
    let back = s.synthesize(&c, &[vec![0.0], vec![1.3]]).unwrap();
    assert!((back[0] - f(0.0)).abs() < 1e-8 && (back[1] - f(1.3)).abs() < 1e-8);

    let t = Truncation { xi_max: 12.0, x_max: Some(5.0), ..Default::default() };
    let s2 = make_system(SystemKind::FourierLaplacian { n: 2 }, t).unwrap();
    let g = |x: &[f64]| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp();
    let c2 = s2.analyze(g);
    let v = s2.synthesize_at(&c2, &[0.3, -0.2]).unwrap();
    assert!((v - g(&[0.3, -0.2])).abs() < 1e-7, "{v}");
    let e = |i: usize, j: usize| s2.eigenvalues()[s2.flat_index(&[i, j]).unwrap()];
    assert!((e(3, 5) - (e(3, 0) + e(0, 5) - e(0, 0))).abs() < 1e-12);
}

fn interior(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![lo + (hi - lo) * (i as f64 + 0.5) / n as f64]).collect()
}

#[test]
fn eigen_relations_hold_by_finite_differences() {
    let cases: Vec<(SpectralSystem, f64, f64)> = vec![
        (sys(SystemKind::DirichletInterval { a: 0.0, b: PI }, 21), 0.1, 3.0),
        (sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 21), -4.0, 4.0),
        (sys(SystemKind::HermiteShifted { d: vec![2.0] }, 21), -3.0, 3.0),
        (sys(SystemKind::OrnsteinUhlenbeck { d: vec![0.5], rotation: None }, 21), -3.0, 3.0),
        (sys(SystemKind::LaguerrePhi { alpha: vec![0.5] }, 21), 0.3, 4.0),
        (sys(SystemKind::LaguerreEll { alpha: vec![0.5] }, 21), 0.3, 20.0),
        (sys(SystemKind::LaguerrePsi { alpha: vec![1.0] }, 21), 0.3, 4.0),
        (sys(SystemKind::LaguerreCalL { alpha: vec![0.5] }, 21), 0.3, 20.0),
        (sys(SystemKind::LaguerrePolynomial { alpha: vec![0.5] }, 21), 0.3, 20.0),
        (sys(SystemKind::UltrasphericalL { lambda: 1.5 }, 21), 0.2, 2.9),
        (sys(SystemKind::UltrasphericalTrig { lambda: 1.5 }, 21), 0.2, 2.9),
    ];
    for (s, lo, hi) in &cases {
        let pts = interior(*lo, *hi, 60);
        for k in 0..=20 {
            let r = eigen_residual(s, k, &pts, 1e-3).unwrap();
            assert!(r <= 1e-4, "{:?} k={k}: {r}", s.kind());
        }
    }
    for kind in [SystemKind::BesselS { lambda: 1.5 }, SystemKind::BesselDelta { lambda: 0.7 }, SystemKind::FourierLaplacian { n: 1 }] {
        let s = make_system(kind, Truncation::default()).unwrap();
        let pts = interior(0.5, 6.0, 40);
        for k in (0..s.len()).step_by(37).take(20) {
            let r = eigen_residual(&s, k, &pts, 1e-3).unwrap();
            assert!(r <= 1e-4, "{:?} mode {k}: {r}", s.kind());
        }
    }
    // rotated Ornstein–Uhlenbeck in two dimensions
    let (c, sn) = (0.6f64, 0.8f64);
    let rot = Some(vec![vec![c, -sn], vec![sn, c]]);
    let s = make_system(
        SystemKind::OrnsteinUhlenbeck { d: vec![1.0, 2.0], rotation: rot },
        Truncation::modes(6),
    )
    .unwrap();
    let pts: Vec<Vec<f64>> = (0..25).map(|i| vec![-1.0 + 0.09 * i as f64, 0.8 - 0.07 * i as f64]).collect();
    for k in 0..s.len() {
        assert!(eigen_residual(&s, k, &pts, 1e-3).unwrap() <= 1e-4, "rotated mode {k}");
    }
}

#[test]
fn divergence_form_matrix_is_symmetric_psd() {
    let n = 60;
    let pts: Vec<f64> = (0..n + 2).map(|i| i as f64 / (n + 1) as f64).collect();
    let spec = FdSpec {
        lower: vec![0.0],
        upper: vec![1.0],
        nodes: vec![n],
        a: Field::Samples(pts.iter().map(|x| 1.5 + (6.0 * x).sin()).collect()),
        v: Field::Samples(pts.iter().map(|x| x * x).collect()),
        mu: 3.0,
    };
    let s = make_system(SystemKind::DivergenceFormFd(spec), Truncation::modes(64)).unwrap();
    let m = s.grid_matrix().unwrap();
    assert!((m - m.transpose()).amax() == 0.0);
    assert!(s.eigenvalues().iter().all(|&l| l > 0.0));
    assert_eq!(s.len(), n);
    for k in 0..20 {
        assert!(eigen_residual(&s, k, &[], 0.0).unwrap() < 1e-10);
    }
    // grid eigenvectors are orthonormal under the node quadrature
    let c = s.analyze(|x| s.eval_modes(x).unwrap()[4]);
    assert!((c.values[4] - 1.0).abs() < 1e-10 && c.values[5].abs() < 1e-10);

    let spec2 = FdSpec {
        lower: vec![0.0, 0.0],
        upper: vec![1.0, 2.0],
        nodes: vec![12, 20],
        a: Field::Constant(1.0),
        v: Field::Constant(0.0),
        mu: 1.0,
    };
    let s2 = make_system(SystemKind::DivergenceFormFd(spec2), Truncation::modes(8)).unwrap();
    let (h1, h2) = (1.0 / 13.0, 2.0 / 21.0);
    let discrete = 4.0 / (h1 * h1) * (PI * h1 / 2.0).sin().powi(2)
        + 4.0 / (h2 * h2) * (PI * h2 / 4.0).sin().powi(2);
    assert!((s2.eigenvalues()[0] - discrete).abs() < 1e-9);
}

#[test]
fn derivative_growth_is_polynomial() {
    let cases = [
        (sys(SystemKind::DirichletInterval { a: 0.0, b: PI }, 64), 0.5, 2.5),
        (sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 64), -1.0, 1.0),
        (sys(SystemKind::LaguerrePhi { alpha: vec![0.5] }, 64), 0.5, 1.5),
        (sys(SystemKind::UltrasphericalL { lambda: 1.5 }, 64), 0.5, 2.5),
    ];
    for (s, lo, hi) in &cases {
        let g = derivative_growth(s, *lo, *hi, 60).unwrap();
        let c = s.growth_exponent().unwrap();
        for beta in 0..3 {
            let eps = g.epsilon[beta];
            println!("{} |β|={beta}: ε = {eps:.3}", s.kind().id());
            assert!(eps.is_finite() && eps <= beta as f64 * c / 2.0 + 0.25, "{:?} β={beta}: {eps}", s.kind());
        }
    }
}

#[test]
fn parseval_defect_flags_under_resolution() {
    let s = sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 16);
    let big = sys(SystemKind::HarmonicOscillator { d: vec![1.0] }, 101);
    let c = s.analyze(|x| big.eval_modes(x).unwrap()[100]);
    assert!(c.check_parseval(1e-6).is_err());
    let ok = s.analyze(|x| s.eval_modes(x).unwrap()[10]);
    ok.check_parseval(1e-10).unwrap();
}

#[test]
fn grid_function_csv_round_trip() {
    let g = GridFunction::new(
        vec![vec![0.1, 2.0], vec![0.3, -1.5]],
        vec![1.0 / 3.0, -2.5e-7],
        vec![0.5, 0.25],
    )
    .unwrap();
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("x0,x1,value,weight"));
    let back = GridFunction::read_csv(buf.as_slice(), None).unwrap();
    assert_eq!(back, g);
    assert!(GridFunction::new(vec![vec![0.0]], vec![1.0], vec![0.0]).is_err());
    assert!((g.mass() - 0.75).abs() < 1e-15);
}

proptest! {
    #[test]
    fn analyze_synthesize_identity_on_coefficients(seed in proptest::collection::vec(-1.0f64..1.0, 24)) {
        let s = sys(SystemKind::LaguerrePhi { alpha: vec![0.5] }, 24);
        let c = Coefficients::from_values(seed);
        let back = s.synthesize(&c, s.quadrature_points()).unwrap();
        let c2 = s.analyze_samples(&back);
        for (a, b) in c.values.iter().zip(&c2.values) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!(c2.parseval_defect.abs() < 1e-8 * (1.0 + c2.input_norm_sq));
    }
}
