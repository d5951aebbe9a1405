//! Randomized maximum and comparison principle checks for `L^σ`.
//!
//! Each trial builds a nonnegative `f` that vanishes at a random interior point
//! `x₀` and lies exactly in the span of the retained modes, so `L^σ f(x₀)` is
//! computed without truncation error and must be `≤ 0`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::frac_power_spectral;
use crate::error::{invalid, Result};
use crate::spectra::{Coefficients, SpectralSystem, SystemKind};

type Map = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// How touching trial functions are manufactured for a system.
pub enum TouchingGenerator {
    /// `f(x) = G(x)·q(s(x))²`; the retained modes span `G·(polynomials in s)`.
    Product {
        weight: Map,
        var: Map,
        /// Interval from which touching points are drawn.
        range: (f64, f64),
        max_degree: Option<usize>,
    },
    /// Random nonnegative node vectors of a grid operator.
    GridVector,
}

/// The generator matching a one-dimensional catalog system.
pub fn touching_generator(system: &SpectralSystem) -> Result<TouchingGenerator> {
    if system.dim() != 1 {
        return Err(invalid("touching generators are defined for one-dimensional systems"));
    }
    let deg = Some(system.len().saturating_sub(1));
    let product = |weight: Map, var: Map, range: (f64, f64), max_degree: Option<usize>| {
        Ok(TouchingGenerator::Product {
            weight,
            var,
            range,
            max_degree,
        })
    };
    match system.kind().clone() {
        SystemKind::DirichletInterval { a, b } => {
            let len = b - a;
            product(
                Box::new(move |x| (PI * (x - a) / len).sin()),
                Box::new(move |x| (PI * (x - a) / len).cos()),
                (a + 0.05 * len, b - 0.05 * len),
                deg,
            )
        }
        SystemKind::HarmonicOscillator { d } | SystemKind::HermiteShifted { d } => {
            let d = d[0];
            let r = 3.0 / d.sqrt();
            product(Box::new(move |x| (-0.5 * d * x * x).exp()), Box::new(|x| x), (-r, r), deg)
        }
        SystemKind::OrnsteinUhlenbeck { d, .. } => {
            let r = 2.0 / d[0].sqrt();
            product(Box::new(|_| 1.0), Box::new(|x| x), (-r, r), deg)
        }
        SystemKind::LaguerrePhi { alpha } => {
            let a = alpha[0];
            product(
                Box::new(move |x| x.powf(a + 0.5) * (-0.5 * x * x).exp()),
                Box::new(|x| x * x),
                (0.2, 3.0),
                deg,
            )
        }
        SystemKind::LaguerreEll { .. } => {
            product(Box::new(|x| (-0.5 * x).exp()), Box::new(|x| x), (0.2, 8.0), deg)
        }
        SystemKind::LaguerrePsi { .. } => {
            product(Box::new(|x| (-0.5 * x * x).exp()), Box::new(|x| x * x), (0.2, 3.0), deg)
        }
        SystemKind::LaguerreCalL { alpha } => {
            let a = alpha[0];
            product(
                Box::new(move |x| x.powf(0.5 * a) * (-0.5 * x).exp()),
                Box::new(|x| x),
                (0.2, 8.0),
                deg,
            )
        }
        SystemKind::LaguerrePolynomial { .. } => {
            product(Box::new(|_| 1.0), Box::new(|x| x), (0.2, 8.0), deg)
        }
        SystemKind::UltrasphericalL { lambda } => product(
            Box::new(move |t| t.sin().powf(lambda)),
            Box::new(|t| t.cos()),
            (0.2, PI - 0.2),
            deg,
        ),
        SystemKind::UltrasphericalTrig { .. } => {
            product(Box::new(|_| 1.0), Box::new(|t| t.cos()), (0.2, PI - 0.2), deg)
        }
        SystemKind::BesselS { lambda } => product(
            Box::new(move |x| x.powf(lambda) * (-0.5 * x * x).exp()),
            Box::new(|x| x * x),
            (0.2, 3.0),
            None,
        ),
        SystemKind::BesselDelta { .. } => product(
            Box::new(|x| (-0.5 * x * x).exp()),
            Box::new(|x| x * x),
            (0.2, 3.0),
            None,
        ),
        SystemKind::FourierLaplacian { .. } => product(
            Box::new(|x| (-0.5 * x * x).exp()),
            Box::new(|x| x),
            (-3.0, 3.0),
            None,
        ),
        SystemKind::DivergenceFormFd(spec) => {
            // arbitrary node vectors lie in the span only when no eigenpair is dropped
            if system.len() < spec.nodes.iter().product::<usize>() {
                return Err(invalid("principle checks on a grid operator need its full spectrum"));
            }
            Ok(TouchingGenerator::GridVector)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipleReport {
    pub system: String,
    pub sigma: f64,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub violations: usize,
    /// Largest observed `L^σ f(x₀)` (maximum principle) or
    /// `L^σ f(x₀) − L^σ g(x₀)` (comparison principle).
    pub worst: f64,
}

struct Trial {
    /// Samples at the analysis quadrature of the nonnegative touching function.
    touching: Vec<f64>,
    /// Samples of an arbitrary companion function in the span.
    companion: Vec<f64>,
    x0: f64,
}

fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> Vec<f64> {
    (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

fn make_trial(system: &SpectralSystem, generator: &TouchingGenerator, rng: &mut ChaCha8Rng) -> Trial {
    let pts = system.quadrature_points();
    match generator {
        TouchingGenerator::GridVector => {
            let n = pts.len();
            let i0 = rng.random_range(0..n);
            let mut touching: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            touching[i0] = 0.0;
            let companion = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            Trial {
                touching,
                companion,
                x0: pts[i0][0],
            }
        }
        TouchingGenerator::Product {
            weight,
            var,
            range,
            max_degree,
        } => {
            let x0 = rng.random_range(range.0..range.1);
            let s0 = var(x0);
            // total degree of q² in s stays within the retained span
            let cap = max_degree.map_or(3, |d| (d / 2).saturating_sub(1).min(3));
            let extra = rng.random_range(0..=cap);
            let q_rest = random_poly(rng, extra);
            let amp = 0.5 + rng.random_range(0.0..1.0);
            let q = |s: f64| (s - s0) * horner(&q_rest, s - s0);
            let p = random_poly(rng, cap.min(2));
            let mut touching: Vec<f64> = pts.iter().map(|x| amp * weight(x[0]) * q(var(x[0])).powi(2)).collect();
            let scale = touching.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                touching.iter_mut().for_each(|v| *v /= scale);
            }
            let companion = pts.iter().map(|x| weight(x[0]) * horner(&p, var(x[0]))).collect();
            Trial {
                touching,
                companion,
                x0,
            }
        }
    }
}

fn frac_at(system: &SpectralSystem, samples: &[f64], sigma: f64, x0: f64) -> Result<f64> {
    let c = system.analyze_samples(samples);
    let lf = frac_power_spectral(system, &c, sigma)?;
    system.synthesize_at(&lf, &[x0])
}

fn run_trials(
    system: &SpectralSystem,
    sigma: f64,
    trials: usize,
    seed: u64,
    tol: f64,
    comparison: bool,
) -> Result<PrincipleReport> {
    super::check_sigma(sigma)?;
    let generator = touching_generator(system)?;
    let outcomes: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let t = make_trial(system, &generator, &mut rng);
            if comparison {
                // f = g + h ≥ g touching at x₀
                let f: Vec<f64> = t.companion.iter().zip(&t.touching).map(|(g, h)| g + h).collect();
                Ok(frac_at(system, &f, sigma, t.x0)? - frac_at(system, &t.companion, sigma, t.x0)?)
            } else {
                frac_at(system, &t.touching, sigma, t.x0)
            }
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for o in outcomes {
        let v = o?;
        worst = worst.max(v);
        if v > tol {
            violations += 1;
        }
    }
    Ok(PrincipleReport {
        system: system.kind().id().to_string(),
        sigma,
        seed,
        trials,
        tol,
        violations,
        worst,
    })
}

/// `f ≥ 0`, `f(x₀) = 0` ⇒ `L^σ f(x₀) ≤ tol`.
pub fn maximum_principle_suite(
    system: &SpectralSystem,
    sigma: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<PrincipleReport> {
    run_trials(system, sigma, trials, seed, tol, false)
}

/// `f ≥ g` touching at `x₀` ⇒ `L^σ f(x₀) ≤ L^σ g(x₀) + tol`.
pub fn comparison_principle_suite(
    system: &SpectralSystem,
    sigma: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<PrincipleReport> {
    run_trials(system, sigma, trials, seed, tol, true)
}

/// Truncated heat kernel `Σ w_k e^{−tλ_k} φ_k(x) φ_k(x')`.
pub fn heat_kernel(system: &SpectralSystem, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let a = system.eval_modes(x)?;
    let b = system.eval_modes(y)?;
    let lam = system.eigenvalues();
    let w = system.spectral_weights();
    Ok((0..system.len()).map(|k| w[k] * (-t * lam[k]).exp() * a[k] * b[k]).sum())
}

impl Coefficients {
    /// Sup over nonzero entries, a cheap scale for relative thresholds.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
