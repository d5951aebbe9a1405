//! Functional calculus on a spectral system: heat semigroup, `L^σ` by two routes, `L^{−σ}`.

mod principles;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::specfun::gamma;
use crate::specfun::quadrature::composite_legendre;
use crate::spectra::{Coefficients, SpectralSystem};

pub use principles::{
    comparison_principle_suite, heat_kernel, maximum_principle_suite, touching_generator,
    PrincipleReport, TouchingGenerator,
};

/// Quadrature for the Balakrishnan integral on `t = e^s`, `s ∈ [s_min, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalakrishnanQuad {
    pub s_min: f64,
    pub s_max: f64,
    pub panels: usize,
    pub per_panel: usize,
    /// Mode-wise relative tolerance of the built-in self-test.
    pub tol: f64,
}

impl Default for BalakrishnanQuad {
    fn default() -> Self {
        BalakrishnanQuad {
            s_min: -30.0,
            s_max: 10.0,
            panels: 25,
            per_panel: 16,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub sigma: f64,
    #[serde(default)]
    pub quad: BalakrishnanQuad,
}

impl FracParams {
    pub fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(FracParams {
            sigma,
            quad: BalakrishnanQuad::default(),
        })
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid(format!("σ = {sigma} must lie strictly inside (0, 1)")));
    }
    Ok(())
}

/// `c_k ↦ e^{−tλ_k} c_k`.
pub fn heat(system: &SpectralSystem, f: &Coefficients, t: f64) -> Result<Coefficients> {
    system.check_coefficients(f)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("heat time t = {t} must be ≥ 0")));
    }
    let lam = system.eigenvalues();
    Ok(f.map(|k, c| if t == 0.0 { c } else { (-t * lam[k]).exp() * c }))
}

/// `c_k ↦ λ_k^σ c_k`; zero modes map to zero.
pub fn frac_power_spectral(system: &SpectralSystem, f: &Coefficients, sigma: f64) -> Result<Coefficients> {
    system.check_coefficients(f)?;
    check_sigma(sigma)?;
    let lam = system.eigenvalues();
    Ok(f.map(|k, c| if lam[k] == 0.0 { 0.0 } else { lam[k].powf(sigma) * c }))
}

/// `(1/Γ(−σ)) ∫₀^∞ (e^{−tλ} − 1) t^{−1−σ} dt` by Gauss–Legendre on `t = e^s`,
/// with analytic tails below `e^{s_min}` and above `e^{s_max}`.
pub fn balakrishnan_multiplier(lambda: f64, sigma: f64, quad: &BalakrishnanQuad) -> Result<f64> {
    check_sigma(sigma)?;
    if !(lambda >= 0.0) {
        return Err(invalid(format!("eigenvalue {lambda} is negative")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    // Push the upper end out until e^{−λt} is negligible there, keeping the node density.
    let s_hi = quad.s_max.max((60.0 / lambda).ln());
    let panels = ((quad.panels as f64) * (s_hi - quad.s_min) / (quad.s_max - quad.s_min)).ceil() as usize;
    let rule = composite_legendre(quad.s_min, s_hi, panels.max(1), quad.per_panel);
    let body: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| {
            let t = s.exp();
            // e^{−λt} − 1 without cancellation for small λt
            w * (-(lambda * t)).exp_m1() * (-sigma * s).exp()
        })
        .sum();
    let eps = quad.s_min.exp();
    let mut lower = 0.0;
    let mut term = 1.0;
    for m in 1..60 {
        term *= -lambda * eps / m as f64;
        let add = term * eps.powf(-sigma) / (m as f64 - sigma);
        lower += add;
        if add.abs() < 1e-18 * lower.abs() {
            break;
        }
    }
    // ∫_T^∞ −t^{−1−σ} dt; the e^{−λt} part is below e^{−60} by the choice of s_hi.
    let upper = -(-sigma * s_hi).exp() / sigma;
    Ok((body + lower + upper) / gamma(-sigma)?)
}

/// Mode-wise Balakrishnan route, self-tested against the scalar identity `= λ^σ`.
pub fn frac_power_balakrishnan(
    system: &SpectralSystem,
    f: &Coefficients,
    params: &FracParams,
) -> Result<Coefficients> {
    system.check_coefficients(f)?;
    check_sigma(params.sigma)?;
    let lam = system.eigenvalues();
    let mut values = Vec::with_capacity(f.len());
    for (k, &c) in f.values.iter().enumerate() {
        let m = balakrishnan_multiplier(lam[k], params.sigma, &params.quad)?;
        let exact = if lam[k] == 0.0 { 0.0 } else { lam[k].powf(params.sigma) };
        let defect = if exact == 0.0 { m.abs() } else { ((m - exact) / exact).abs() };
        if defect > params.quad.tol {
            return Err(Error::Tolerance {
                what: format!("Balakrishnan quadrature at mode {k} (λ = {})", lam[k]),
                measured: defect,
                allowed: params.quad.tol,
            });
        }
        values.push(m * c);
    }
    Ok(Coefficients { values, ..f.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroModePolicy {
    #[default]
    Error,
    Drop,
}

/// `c_k ↦ λ_k^{−σ} c_k` on the range of L.
pub fn neg_frac_power(
    system: &SpectralSystem,
    g: &Coefficients,
    sigma: f64,
    policy: ZeroModePolicy,
) -> Result<Coefficients> {
    system.check_coefficients(g)?;
    check_sigma(sigma)?;
    let lam = system.eigenvalues();
    let scale = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut values = Vec::with_capacity(g.len());
    for (k, &c) in g.values.iter().enumerate() {
        if lam[k] == 0.0 {
            if c.abs() > 1e-14 * scale && policy == ZeroModePolicy::Error {
                return Err(Error::ZeroMode(k));
            }
            values.push(0.0);
        } else {
            values.push(lam[k].powf(-sigma) * c);
        }
    }
    Ok(Coefficients { values, ..g.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_identity_across_scales() {
        let q = BalakrishnanQuad::default();
        for &sigma in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            for &lambda in &[1e-4, 0.01, 0.75, 1.0, 7.3, 400.0, 1e4, 2.5e5] {
                let m = balakrishnan_multiplier(lambda, sigma, &q).unwrap();
                let exact = f64::powf(lambda, sigma);
                assert!(((m - exact) / exact).abs() < 1e-10, "σ={sigma} λ={lambda}: {m} vs {exact}");
            }
        }
        assert_eq!(balakrishnan_multiplier(0.0, 0.3, &q).unwrap(), 0.0);
        assert!(balakrishnan_multiplier(1.0, 1.0, &q).is_err());
    }
}
