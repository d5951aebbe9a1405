//! Weak formulation of the reflected extension against compactly supported tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trace_multiplier, ExtensionField};
use crate::error::{invalid, Result};
use crate::fracops::frac_power_spectral;
use crate::spectra::SystemKind;

fn bump(t: f64) -> (f64, f64) {
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let s = 1.0 - t * t;
    (s.powi(4), -8.0 * t * s.powi(3))
}

/// `φ(x, y) = B((x − x₀)/r_x) B(y/r_y)`, `B(t) = (1 − t²)⁴₊`; even in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpTest {
    pub center: f64,
    pub radius_x: f64,
    pub radius_y: f64,
}

impl BumpTest {
    pub fn value_grad(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (bx, dbx) = bump((x - self.center) / self.radius_x);
        let (by, dby) = bump(y / self.radius_y);
        (bx * by, dbx * by / self.radius_x, bx * dby / self.radius_y)
    }

    /// `sup|φ| + sup|∇φ|`, sampled on a 401² grid of the support.
    pub fn c1_norm(&self) -> f64 {
        let mut g = 0.0f64;
        for i in 0..=400 {
            for j in 0..=400 {
                let s = -1.0 + i as f64 / 200.0;
                let t = -1.0 + j as f64 / 200.0;
                let (_, gx, gy) = self.value_grad(self.center + s * self.radius_x, t * self.radius_y);
                g = g.max(gx.hypot(gy));
            }
        }
        1.0 + g
    }
}

/// Midpoint cells over the test support: `nx` in `x`, `ny` per half in `y`;
/// the first `y`-cell is the excluded strip `|y| < δ = r_y/ny`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakGrid {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakResidual {
    /// `∬_{|y|≥δ} (b∇ũ·∇φ + Vũφ)|y|^{1−2σ}`.
    pub outside_strip: f64,
    /// One-cell estimate of the `|y| < δ` contribution.
    pub strip: f64,
    pub total: f64,
    pub delta: f64,
    /// `|I_h − I_{2h}|`, the quadrature error estimate.
    pub quadrature_error: f64,
    pub test_c1: f64,
}

/// A function `ũ(x, y) = u(x, |y|)` on `(lo, hi) × ℝ` seen through its weak-form data.
pub trait ReflectedProfile: Sync {
    fn sigma(&self) -> f64;
    /// Open `x`-interval on which the profile lives.
    fn x_domain(&self) -> (f64, f64);
    fn potential(&self, x: f64) -> f64;
    /// `[u, ∂_x u, y^{1−2σ} ∂_y u]` at `(x_i, y)` for `y > 0`.
    fn columns(&self, xs: &[f64], y: f64) -> Result<Vec<[f64; 3]>>;
}

/// `ũ ≡ value` with `V ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantProfile {
    pub value: f64,
    pub sigma: f64,
    pub x_domain: (f64, f64),
}

impl ReflectedProfile for ConstantProfile {
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn x_domain(&self) -> (f64, f64) {
        self.x_domain
    }
    fn potential(&self, _: f64) -> f64 {
        0.0
    }
    fn columns(&self, xs: &[f64], _: f64) -> Result<Vec<[f64; 3]>> {
        Ok(vec![[self.value, 0.0, 0.0]; xs.len()])
    }
}

impl ReflectedProfile for ExtensionField<'_> {
    fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `(b, V)` of `L = −∂(b∂) + V` are coded for the Dirichlet interval and the 1D oscillator.
    fn x_domain(&self) -> (f64, f64) {
        match self.system.kind() {
            SystemKind::DirichletInterval { a, b } => (*a, *b),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn potential(&self, x: f64) -> f64 {
        match self.system.kind() {
            SystemKind::HarmonicOscillator { d } => d[0] * d[0] * x * x,
            _ => 0.0,
        }
    }

    fn columns(&self, xs: &[f64], y: f64) -> Result<Vec<[f64; 3]>> {
        let sys = self.system;
        match sys.kind() {
            SystemKind::DirichletInterval { .. } => {}
            SystemKind::HarmonicOscillator { d } if d.len() == 1 => {}
            other => return Err(invalid(format!("weak residual not available for {}", other.id()))),
        }
        let w = sys.spectral_weights();
        let lam = sys.eigenvalues();
        let m = self.at(y)?.values;
        // y^{1−2σ} ∂_y u = −(1/c_σ) Σ c_k trace_k(y) φ_k
        let flux = lam
            .iter()
            .enumerate()
            .map(|(k, &l)| Ok(-self.coefficients.values[k] * trace_multiplier(y, l, self.sigma)? / self.c_sigma))
            .collect::<Result<Vec<f64>>>()?;
        xs.iter()
            .map(|&x| {
                let vals = sys.eval_modes(&[x])?;
                let (grad, _) = sys
                    .axis_derivative_tables(0, x)
                    .ok_or_else(|| invalid("weak residual needs a tensor system"))?;
                let mut out = [0.0; 3];
                for k in 0..lam.len() {
                    out[0] += w[k] * m[k] * vals[k];
                    out[1] += w[k] * m[k] * grad[k];
                    out[2] += w[k] * flux[k] * vals[k];
                }
                Ok(out)
            })
            .collect()
    }
}

fn half_integral(profile: &dyn ReflectedProfile, test: &BumpTest, grid: WeakGrid) -> Result<(f64, f64)> {
    let (lo, hi) = profile.x_domain();
    if test.center - test.radius_x <= lo || test.center + test.radius_x >= hi {
        return Err(invalid("test support must lie inside the domain"));
    }
    if grid.nx < 2 || grid.ny < 2 {
        return Err(invalid("weak grid needs at least two cells per direction"));
    }
    let sigma = profile.sigma();
    let hx = 2.0 * test.radius_x / grid.nx as f64;
    let hy = test.radius_y / grid.ny as f64;
    let xs: Vec<f64> = (0..grid.nx).map(|i| test.center - test.radius_x + (i as f64 + 0.5) * hx).collect();
    let per_cell = (0..grid.ny)
        .into_par_iter()
        .map(|j| {
            let a = j as f64 * hy;
            let b = a + hy;
            let y = a + 0.5 * hy;
            // exact ∫_a^b y^{1−2σ} dy
            let moment = (b.powf(2.0 - 2.0 * sigma) - a.powf(2.0 - 2.0 * sigma)) / (2.0 - 2.0 * sigma);
            let cols = profile.columns(&xs, y)?;
            let mut acc = 0.0;
            for (&x, [u, ux, fl]) in xs.iter().zip(cols) {
                let (phi, px, py) = test.value_grad(x, y);
                acc += hx * (moment * (ux * px + profile.potential(x) * u * phi) + hy * fl * py);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    let strip = per_cell[0];
    let rest: f64 = per_cell[1..].iter().sum();
    Ok((rest, strip))
}

/// `I = ∬ (b∇ũ·∇φ + Vũφ)|y|^{1−2σ} dx dy` over the symmetric test support, with the
/// `|y| < δ` strip estimated separately and a coarse-grid error estimate.
pub fn weak_residual(profile: &dyn ReflectedProfile, test: &BumpTest, grid: WeakGrid) -> Result<WeakResidual> {
    let (rest, strip) = half_integral(profile, test, grid)?;
    let coarse = WeakGrid {
        nx: grid.nx / 2,
        ny: grid.ny / 2,
    };
    let (rc, sc) = half_integral(profile, test, coarse)?;
    let total = 2.0 * (rest + strip);
    Ok(WeakResidual {
        outside_strip: 2.0 * rest,
        strip: 2.0 * strip,
        total,
        delta: test.radius_y / grid.ny as f64,
        quadrature_error: (total - 2.0 * (rc + sc)).abs(),
        test_c1: test.c1_norm(),
    })
}

/// The limit of [`weak_residual`] when the trace does not vanish:
/// `(2/c_σ) ∫ (L^σ f)(x) φ(x, 0) dx`, by the midpoint rule on `n` cells.
pub fn weak_boundary_limit(field: &ExtensionField, test: &BumpTest, n: usize) -> Result<f64> {
    let lf = frac_power_spectral(field.system, &field.coefficients, field.sigma)?;
    let h = 2.0 * test.radius_x / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = test.center - test.radius_x + (i as f64 + 0.5) * h;
        acc += h * field.system.synthesize_at(&lf, &[x])? * test.value_grad(x, 0.0).0;
    }
    Ok(2.0 * acc / field.c_sigma)
}
