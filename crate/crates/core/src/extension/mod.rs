//! The extension problem in one extra variable `y > 0`: closed-form multipliers,
//! the Neumann trace, reflection, the weak formulation and a degenerate solver.

mod degenerate;
mod weak;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fracops::check_sigma;
use crate::specfun::quadrature::composite_legendre;
use crate::specfun::{bessel_k_scaled_unchecked, gamma_unchecked, ln_gamma_unchecked};
use crate::spectra::{Coefficients, SpectralSystem, SystemKind};

pub use degenerate::{solve_degenerate_fd, DegenerateGrid, DegenerateSolution, SolverOptions};
pub use weak::{
    weak_boundary_limit, weak_residual, BumpTest, ConstantProfile, ReflectedProfile, WeakGrid, WeakResidual,
};

/// `c_σ = 4^{σ−1/2} Γ(σ)/Γ(1−σ)`.
pub fn extension_constant(sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(4f64.powf(sigma - 0.5) * gamma_unchecked(sigma) / gamma_unchecked(1.0 - sigma))
}

/// `[2^{1−ν}/Γ(ν)] z^ν K_ν(z)` for `ν ∈ (0, 1)`, `z ≥ 0`: the two-sided `I_{±ν}` series
/// below `z = 1`, the scaled `K` integral in logs above.
fn bessel_profile(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    if z < 1.0 {
        // Γ(1−ν) [Σ q^k/(k! Γ(k+1−ν)) − (z/2)^{2ν} Σ q^k/(k! Γ(k+1+ν))], q = z²/4
        let q = 0.25 * z * z;
        let (mut a, mut b) = (1.0 / gamma_unchecked(1.0 - nu), 1.0 / gamma_unchecked(1.0 + nu));
        let (mut sa, mut sb) = (a, b);
        for k in 1..40 {
            let kf = k as f64;
            a *= q / (kf * (kf - nu));
            b *= q / (kf * (kf + nu));
            sa += a;
            sb += b;
            if a.abs() < 1e-17 * sa.abs() && b.abs() < 1e-17 * sb.abs() {
                break;
            }
        }
        return gamma_unchecked(1.0 - nu) * (sa - (0.5 * z).powf(2.0 * nu) * sb);
    }
    let ln = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma_unchecked(nu) + nu * z.ln()
        + bessel_k_scaled_unchecked(nu, z).ln()
        - z;
    ln.exp().min(1.0)
}

fn check_y_lambda(y: f64, lambda: f64) -> Result<()> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(invalid(format!("extension variable y = {y} must be finite and ≥ 0")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("eigenvalue {lambda} must be finite and ≥ 0")));
    }
    Ok(())
}

/// `m_σ(y, λ) = [2^{1−σ}/Γ(σ)] (y√λ)^σ K_σ(y√λ)`, with `m_σ(y, 0) = 1`.
pub fn extension_multiplier(y: f64, lambda: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_y_lambda(y, lambda)?;
    Ok(bessel_profile(sigma, y * lambda.sqrt()))
}

/// `∂_y m_σ(y, λ) = −[2^{1−σ}/Γ(σ)] √λ z^σ K_{1−σ}(z)`, `z = y√λ`, for `y > 0`.
pub fn extension_multiplier_dy(y: f64, lambda: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_y_lambda(y, lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if y == 0.0 {
        return Err(invalid("∂_y m_σ is singular at y = 0 for σ > 1/2; use trace_multiplier"));
    }
    // −c_σ y^{1−2σ} ∂_y m = λ^σ · profile_{1−σ}(z)  ⇒  ∂_y m = −profile_{1−σ}(z) λ^σ y^{2σ−1} / c_σ
    let c = extension_constant(sigma)?;
    Ok(-bessel_profile(1.0 - sigma, y * lambda.sqrt()) * lambda.powf(sigma) * y.powf(2.0 * sigma - 1.0) / c)
}

/// `−c_σ y^{1−2σ} ∂_y m_σ(y, λ)`, which tends to `λ^σ` as `y → 0⁺`.
pub fn trace_multiplier(y: f64, lambda: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_y_lambda(y, lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(lambda.powf(sigma) * bessel_profile(1.0 - sigma, y * lambda.sqrt()))
}

/// `y^{2σ}/(4^σ Γ(σ)) ∫₀^∞ e^{−tλ} e^{−y²/(4t)} t^{−1−σ} dt` by Gauss–Legendre on `t = e^s`,
/// summed in logs. Independent of the Bessel-K route; used to validate it.
pub fn extension_multiplier_quadrature(y: f64, lambda: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_y_lambda(y, lambda)?;
    if y == 0.0 {
        return Ok(1.0);
    }
    let q = 0.25 * y * y;
    // exponent E(s) = −λe^s − q e^{−s} − σ s; both double-exponential walls are below e^{−800}
    // outside [ln(q/800), ln(800/λ)], and the single wall on the right decays like e^{−σ s}.
    let lo = (q / 800.0).ln();
    let hi = if lambda > 0.0 { (800.0 / lambda).ln() } else { lo + 800.0 / sigma };
    let hi = hi.max(lo + 1.0);
    let panels = ((hi - lo) / 0.5).ceil() as usize;
    let rule = composite_legendre(lo, hi, panels, 16);
    let terms: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| w.ln() - lambda * s.exp() - q * (-s).exp() - sigma * s)
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    let ln = 2.0 * sigma * y.ln() - sigma * 4f64.ln() - ln_gamma_unchecked(sigma) + peak + sum.ln();
    Ok(ln.exp())
}

/// `u(x, y) = Σ c_k m_σ(y, λ_k) φ_k(x)` for `y ≥ 0`.
#[derive(Debug, Clone)]
pub struct ExtensionField<'a> {
    pub system: &'a SpectralSystem,
    pub coefficients: Coefficients,
    pub sigma: f64,
    pub c_sigma: f64,
}

pub fn extend<'a>(system: &'a SpectralSystem, f: &Coefficients, sigma: f64) -> Result<ExtensionField<'a>> {
    system.check_coefficients(f)?;
    Ok(ExtensionField {
        system,
        coefficients: f.clone(),
        sigma,
        c_sigma: extension_constant(sigma)?,
    })
}

impl ExtensionField<'_> {
    pub fn multipliers(&self, y: f64) -> Result<Vec<f64>> {
        check_y_lambda(y, 0.0)?;
        Ok(self
            .system
            .eigenvalues()
            .iter()
            .map(|&l| bessel_profile(self.sigma, y * l.sqrt()))
            .collect())
    }

    /// Coefficients of `u(·, y)`.
    pub fn at(&self, y: f64) -> Result<Coefficients> {
        let m = self.multipliers(y)?;
        Ok(self.coefficients.map(|k, c| c * m[k]))
    }

    /// Coefficients of `∂_y u(·, y)`, `y > 0`.
    pub fn dy_at(&self, y: f64) -> Result<Coefficients> {
        let lam = self.system.eigenvalues();
        let mut values = Vec::with_capacity(lam.len());
        for (k, &c) in self.coefficients.values.iter().enumerate() {
            values.push(c * extension_multiplier_dy(y, lam[k], self.sigma)?);
        }
        Ok(Coefficients::from_values(values))
    }

    /// Coefficients of `−c_σ y^{1−2σ} ∂_y u(·, y)`.
    pub fn trace_at(&self, y: f64) -> Result<Coefficients> {
        let lam = self.system.eigenvalues();
        let mut values = Vec::with_capacity(lam.len());
        for (k, &c) in self.coefficients.values.iter().enumerate() {
            values.push(c * trace_multiplier(y, lam[k], self.sigma)?);
        }
        Ok(Coefficients::from_values(values))
    }

    pub fn value(&self, x: &[f64], y: f64) -> Result<f64> {
        self.system.synthesize_at(&self.at(y)?, x)
    }

    /// `ũ(x, y) = u(x, |y|)`.
    pub fn reflected_value(&self, x: &[f64], y: f64) -> Result<f64> {
        self.value(x, y.abs())
    }

    pub fn gradient_x(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        self.system.synthesize_gradient(&self.at(y)?, x)
    }
}

/// Richardson-extrapolated Neumann trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEstimate {
    pub coefficients: Coefficients,
    /// Relative size of the last extrapolation correction, the convergence indicator.
    pub spread: f64,
    /// Extrapolation levels used, per mode.
    pub levels: Vec<usize>,
}

/// Default grid `y = 2^{−j}`, `j = 3..=12`.
pub fn default_trace_grid() -> Vec<f64> {
    (3..=12).map(|j| 2f64.powi(-j)).collect()
}

fn check_geometric(ys: &[f64]) -> Result<f64> {
    if ys.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return Err(invalid("trace grid needs at least two positive values"));
    }
    let r = ys[0] / ys[1];
    if !(r > 1.0) || ys.windows(2).any(|w| ((w[0] / w[1]) / r - 1.0).abs() > 1e-10) {
        return Err(invalid("trace grid must be geometric and decreasing"));
    }
    Ok(r)
}

/// Repeated Richardson elimination on a geometric grid, the order at each level
/// taken from the measured slope of the last three entries.
fn richardson(seq: &[f64], ratio: f64) -> (f64, f64, usize) {
    let mut t = seq.to_vec();
    let scale = seq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut levels = 0;
    let mut correction = if t.len() >= 2 { t[t.len() - 1] - t[t.len() - 2] } else { 0.0 };
    while t.len() >= 3 && levels < 3 {
        let n = t.len();
        let d1 = t[n - 2] - t[n - 3];
        let d2 = t[n - 1] - t[n - 2];
        if d2.abs() <= 1e-14 * scale {
            break;
        }
        let q = d1 / d2;
        if !(q > 1.0) {
            break;
        }
        let p = q.ln() / ratio.ln();
        if p > 8.0 {
            break;
        }
        let f = ratio.powf(p);
        t = (1..n).map(|i| t[i] + (t[i] - t[i - 1]) / (f - 1.0)).collect();
        correction = d2 / (f - 1.0);
        levels += 1;
    }
    (t[t.len() - 1], correction, levels)
}

/// `−c_σ y^{1−2σ} ∂_y u` on a decreasing geometric `y`-grid, extrapolated to `y = 0`.
/// Fails with [`Error::Convergence`] when the final correction exceeds `tol` relatively.
pub fn trace_derivative(field: &ExtensionField, ys: &[f64], tol: f64) -> Result<TraceEstimate> {
    let ratio = check_geometric(ys)?;
    let lam = field.system.eigenvalues();
    let w = field.system.spectral_weights();
    let results: Vec<Result<(f64, f64, usize)>> = (0..lam.len())
        .into_par_iter()
        .map(|k| {
            let c = field.coefficients.values[k];
            if c == 0.0 || lam[k] == 0.0 {
                return Ok((0.0, 0.0, 0));
            }
            let seq = ys
                .iter()
                .map(|&y| trace_multiplier(y, lam[k], field.sigma).map(|t| t * c))
                .collect::<Result<Vec<f64>>>()?;
            Ok(richardson(&seq, ratio))
        })
        .collect();
    let mut values = Vec::with_capacity(lam.len());
    let mut levels = Vec::with_capacity(lam.len());
    let (mut num, mut den) = (0.0, 0.0);
    for (k, r) in results.into_iter().enumerate() {
        let (v, corr, lv) = r?;
        values.push(v);
        levels.push(lv);
        num += w[k] * corr * corr;
        den += w[k] * v * v;
    }
    let spread = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    if spread > tol {
        return Err(Error::Convergence(format!(
            "trace extrapolation spread {spread:.3e} exceeds {tol:.3e} on the y-grid"
        )));
    }
    Ok(TraceEstimate {
        coefficients: Coefficients::from_values(values),
        spread,
        levels,
    })
}

/// `ũ(x, y) = u(x, |y|)` on a tensor grid, `values[i * ys.len() + j]`.
#[derive(Debug, Clone, Serialize)]
pub struct ReflectedSamples {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn reflect(field: &ExtensionField, xs: &[Vec<f64>], ys: &[f64]) -> Result<ReflectedSamples> {
    let w = field.system.spectral_weights();
    let modes = xs
        .iter()
        .map(|x| field.system.eval_modes(x))
        .collect::<Result<Vec<_>>>()?;
    let mut columns = Vec::with_capacity(ys.len());
    for &y in ys {
        let c = field.at(y.abs())?;
        columns.push(c.values.iter().zip(w).map(|(a, b)| a * b).collect::<Vec<f64>>());
    }
    let values = modes
        .par_iter()
        .flat_map_iter(|phi| columns.iter().map(move |c| c.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>()))
        .collect();
    Ok(ReflectedSamples {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        values,
    })
}

impl ReflectedSamples {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.xs.first().map_or(1, |x| x.len());
        let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        header.push("value".into());
        w.write_record(&header)?;
        for (i, x) in self.xs.iter().enumerate() {
            for (j, &y) in self.ys.iter().enumerate() {
                let mut row: Vec<String> = x.iter().map(|v| crate::spectra::fmt_f64(*v)).collect();
                row.push(crate::spectra::fmt_f64(y));
                row.push(crate::spectra::fmt_f64(self.values[i * self.ys.len() + j]));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientSample {
    pub y: f64,
    /// `‖∇_x u(·, y)‖_{L²}`.
    pub gradient_norm: f64,
    /// `μ^{1/2} ‖L^{1/2} f‖_{L²}`.
    pub bound: f64,
}

/// `‖∇_x u(·, y)‖` against `μ^{1/2}‖L^{1/2} f‖` for the Dirichlet interval (μ = 1, by
/// Gauss–Legendre quadrature of the synthesized gradient) and for grid operators
/// (discrete gradient over every cell face, boundary values zero).
pub fn gradient_witness(field: &ExtensionField, ys: &[f64]) -> Result<Vec<GradientSample>> {
    let sys = field.system;
    let lam = sys.eigenvalues();
    let w = sys.spectral_weights();
    let half: f64 = (0..lam.len())
        .map(|k| w[k] * lam[k] * field.coefficients.values[k].powi(2))
        .sum::<f64>()
        .sqrt();
    match sys.kind() {
        SystemKind::DirichletInterval { a, b } => {
            let rule = composite_legendre(*a, *b, (sys.len() / 4).max(8), 16);
            ys.iter()
                .map(|&y| {
                    let c = field.at(y)?;
                    let mut acc = 0.0;
                    for (x, wq) in rule.nodes.iter().zip(&rule.weights) {
                        acc += wq * sys.synthesize_gradient(&c, &[*x])?[0].powi(2);
                    }
                    Ok(GradientSample {
                        y,
                        gradient_norm: acc.sqrt(),
                        bound: half,
                    })
                })
                .collect()
        }
        SystemKind::DivergenceFormFd(spec) => {
            let vectors = sys.grid_vectors().expect("grid system");
            let h = spec.spacing();
            let cell: f64 = h.iter().product();
            let nodes = &spec.nodes;
            ys.iter()
                .map(|&y| {
                    let c = field.at(y)?;
                    let v = vectors * nalgebra::DVector::from_vec(c.values.clone());
                    let mut acc = 0.0;
                    for ax in 0..nodes.len() {
                        let stride: usize = nodes[ax + 1..].iter().product();
                        for flat in 0..v.len() {
                            let i = (flat / stride) % nodes[ax];
                            let here = v[flat];
                            let next = if i + 1 < nodes[ax] { v[flat + stride] } else { 0.0 };
                            acc += ((next - here) / h[ax]).powi(2) * cell;
                            if i == 0 {
                                acc += (here / h[ax]).powi(2) * cell;
                            }
                        }
                    }
                    Ok(GradientSample {
                        y,
                        gradient_norm: acc.sqrt(),
                        bound: spec.mu.sqrt() * half,
                    })
                })
                .collect()
        }
        other => Err(invalid(format!("gradient witness not available for {}", other.id()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_known_orders() {
        let seq: Vec<f64> = (3..=12)
            .map(|j| {
                let y = 2f64.powi(-j);
                2.0 + 0.7 * y.powf(0.5) - 0.2 * y * y
            })
            .collect();
        let (e, _, lv) = richardson(&seq, 2.0);
        assert!((e - 2.0).abs() < 1e-6, "{e}");
        assert!(lv >= 1);
    }

    #[test]
    fn series_and_integral_agree_at_the_switch() {
        for &nu in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            let series = bessel_profile(nu, 1.0 - 1e-12);
            let ln = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma_unchecked(nu)
                + bessel_k_scaled_unchecked(nu, 1.0).ln()
                - 1.0;
            assert!((series - ln.exp()).abs() < 1e-12, "ν={nu}: {series} vs {}", ln.exp());
        }
    }

    #[test]
    fn half_integer_profile() {
        for &z in &[0.0, 1e-6, 0.3, 2.0, 40.0] {
            assert!((bessel_profile(0.5, z) - (-z as f64).exp()).abs() < 1e-13 * (1.0 + z));
        }
    }
}
