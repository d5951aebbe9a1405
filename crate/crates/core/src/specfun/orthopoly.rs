//! Classical orthogonal polynomials and the eigenfunction systems built on them.
//!
//! Everything is evaluated by three-term recurrences. Function systems carry
//! their exponential/power prefactor through a log-scaled recurrence so that
//! large degrees and arguments neither overflow nor underflow prematurely.

use std::f64::consts::PI;

use super::gamma::ln_gamma_unchecked;
use crate::error::{domain, invalid, Result};

/// Degrees above this are rejected.
pub const MAX_DEGREE: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    Orthonormal,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyKind {
    /// Physicists' Hermite, orthogonal for `e^{−x²}` on ℝ.
    Hermite,
    /// Laguerre `L_k^{α_i}` per axis, orthogonal for `x^α e^{−x}` on (0, ∞).
    Laguerre { alpha: Vec<f64> },
    /// Gegenbauer `P_k^λ`, orthogonal for `(1 − x²)^{λ−1/2}` on (−1, 1).
    Ultraspherical { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolyFamily {
    pub kind: PolyKind,
    pub normalization: Normalization,
}

impl PolyFamily {
    pub fn new(kind: PolyKind, normalization: Normalization) -> Result<Self> {
        match &kind {
            PolyKind::Laguerre { alpha } => check_alpha(alpha)?,
            PolyKind::Ultraspherical { lambda } => check_lambda(*lambda)?,
            PolyKind::Hermite => {}
        }
        Ok(Self {
            kind,
            normalization,
        })
    }
}

pub(crate) fn check_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(invalid("Laguerre parameter vector α is empty"));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > -1.0)) {
        return Err(invalid(format!("Laguerre parameter α = {a} must exceed −1")));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("ultraspherical type λ = {lambda} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_scales(d: &[f64]) -> Result<()> {
    if d.is_empty() {
        return Err(invalid("scale vector d is empty"));
    }
    if let Some(x) = d.iter().find(|x| !(**x > 0.0)) {
        return Err(invalid(format!("scale d_i = {x} must be positive")));
    }
    Ok(())
}

/// Runs `p_{k+1} = step(k, p_k, p_{k−1})` from `p_0 = exp(log_p0)`, `p_{−1} = 0`,
/// carrying the magnitude in a separate log scale.
fn scaled_recurrence(
    n_max: usize,
    log_p0: f64,
    mut step: impl FnMut(usize, f64, f64) -> f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let emit = |r: f64, log_s: f64| -> f64 {
        if r == 0.0 {
            0.0
        } else {
            r.signum() * (r.abs().ln() + log_s).exp()
        }
    };
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut log_s = log_p0;
    out.push(emit(cur, log_s));
    for k in 0..n_max {
        let next = step(k, cur, prev);
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e150 || (m < 1e-150 && m > 0.0) {
            prev /= m;
            cur /= m;
            log_s += m.ln();
        }
        out.push(emit(cur, log_s));
    }
    out
}

/// Hermite functions `h_0..h_n` (orthonormal in L²(ℝ, dx)).
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    scaled_recurrence(n_max, -0.5 * x * x - 0.25 * PI.ln(), |k, p, pm| {
        let kf = k as f64;
        (2.0 / (kf + 1.0)).sqrt() * x * p - (kf / (kf + 1.0)).sqrt() * pm
    })
}

/// Hermite polynomials orthonormal for `π^{−1/2} e^{−s²} ds`.
pub fn hermite_orthonormal(n_max: usize, s: f64) -> Vec<f64> {
    scaled_recurrence(n_max, 0.0, |k, p, pm| {
        let kf = k as f64;
        (2.0 / (kf + 1.0)).sqrt() * s * p - (kf / (kf + 1.0)).sqrt() * pm
    })
}

/// Physicists' Hermite polynomials `H_0..H_n`.
pub fn hermite_raw(n_max: usize, x: f64) -> Vec<f64> {
    scaled_recurrence(n_max, 0.0, |k, p, pm| 2.0 * x * p - 2.0 * k as f64 * pm)
}

/// Laguerre polynomials `L_k^α` orthonormal for `s^α e^{−s} ds` (leading sign `(−1)^k`).
pub fn laguerre_orthonormal(n_max: usize, alpha: f64, s: f64) -> Vec<f64> {
    scaled_recurrence(n_max, -0.5 * ln_gamma_unchecked(alpha + 1.0), |k, p, pm| {
        laguerre_step(k, alpha, s, p, pm)
    })
}

fn laguerre_step(k: usize, alpha: f64, s: f64, p: f64, pm: f64) -> f64 {
    let kf = k as f64;
    ((2.0 * kf + alpha + 1.0 - s) * p - (kf * (kf + alpha)).sqrt() * pm)
        / ((kf + 1.0) * (kf + alpha + 1.0)).sqrt()
}

/// `e^{log_extra} · e^{−s/2} L̃_k^α(s)`, the Laguerre functions `ℓ_k^α` times a prefactor.
pub fn laguerre_ell(n_max: usize, alpha: f64, s: f64, log_extra: f64) -> Vec<f64> {
    let log_p0 = log_extra - 0.5 * s - 0.5 * ln_gamma_unchecked(alpha + 1.0);
    scaled_recurrence(n_max, log_p0, |k, p, pm| laguerre_step(k, alpha, s, p, pm))
}

/// Standard Laguerre polynomials `L_k^α`.
pub fn laguerre_raw(n_max: usize, alpha: f64, s: f64) -> Vec<f64> {
    scaled_recurrence(n_max, 0.0, |k, p, pm| {
        let kf = k as f64;
        ((2.0 * kf + alpha + 1.0 - s) * p - (kf + alpha) * pm) / (kf + 1.0)
    })
}

/// Gegenbauer polynomials `P_k^λ` with `P_1 = 2λx`.
pub fn gegenbauer_raw(n_max: usize, lambda: f64, x: f64) -> Vec<f64> {
    scaled_recurrence(n_max, 0.0, |k, p, pm| {
        let kf = k as f64;
        (2.0 * (kf + lambda) * x * p - (kf + 2.0 * lambda - 1.0) * pm) / (kf + 1.0)
    })
}

/// Off-diagonal Jacobi coefficient `b_k` of the orthonormal Gegenbauer recurrence.
pub fn gegenbauer_offdiag(k: usize, lambda: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    (kf * (kf + 2.0 * lambda - 1.0) / (4.0 * (kf + lambda) * (kf + lambda - 1.0))).sqrt()
}

/// `ln ∫_{−1}^{1} (1 − x²)^{λ−1/2} dx`.
pub fn gegenbauer_ln_mass(lambda: f64) -> f64 {
    0.5 * PI.ln() + ln_gamma_unchecked(lambda + 0.5) - ln_gamma_unchecked(lambda + 1.0)
}

/// `ln ‖P_k^λ‖²` in `(1 − x²)^{λ−1/2} dx`:
/// `π 2^{1−2λ} Γ(k+2λ) / (k! (k+λ) Γ(λ)²)`.
pub fn gegenbauer_ln_norm_sq(k: usize, lambda: f64) -> f64 {
    let kf = k as f64;
    PI.ln() + (1.0 - 2.0 * lambda) * 2f64.ln() + ln_gamma_unchecked(kf + 2.0 * lambda)
        - ln_gamma_unchecked(kf + 1.0)
        - (kf + lambda).ln()
        - 2.0 * ln_gamma_unchecked(lambda)
}

fn gegenbauer_scaled(n_max: usize, lambda: f64, x: f64, log_extra: f64) -> Vec<f64> {
    let log_p0 = log_extra - 0.5 * gegenbauer_ln_mass(lambda);
    scaled_recurrence(n_max, log_p0, |k, p, pm| {
        (x * p - gegenbauer_offdiag(k, lambda) * pm) / gegenbauer_offdiag(k + 1, lambda)
    })
}

/// Gegenbauer polynomials orthonormal for `(1 − x²)^{λ−1/2} dx`.
pub fn gegenbauer_orthonormal(n_max: usize, lambda: f64, x: f64) -> Vec<f64> {
    gegenbauer_scaled(n_max, lambda, x, 0.0)
}

/// Eigenfunction systems with closed-form evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "basis")]
pub enum Basis {
    /// Raw or orthonormal classical polynomials in the plain variable.
    Polynomial(PolyFamily),
    /// `h_k^D(x) = Π d_i^{1/4} h_{k_i}(√d_i x_i)`, orthonormal in L²(ℝⁿ, dx).
    HermiteFunction { d: Vec<f64> },
    /// `H̃_k^D(x) = Π H̃_{k_i}(√d_i x_i)`, orthonormal in the Gaussian measure `γ_D`.
    HermitePolynomial { d: Vec<f64> },
    /// `φ_k^α(x) = Π x_i^{α_i} (2x_i)^{1/2} e^{−x_i²/2} L̃_{k_i}^{α_i}(x_i²)`, in dx.
    LaguerrePhi { alpha: Vec<f64> },
    /// `ℓ_k^α(x) = Π e^{−x_i/2} L̃_{k_i}^{α_i}(x_i)`, in `x^α dx`.
    LaguerreEll { alpha: Vec<f64> },
    /// `ψ_k^α(x) = Π √2 ℓ_{k_i}^{α_i}(x_i²)`, in `x^{2α+1} dx`.
    LaguerrePsi { alpha: Vec<f64> },
    /// `𝓛_k^α(x) = Π x_i^{α_i/2} ℓ_{k_i}^{α_i}(x_i)`, in dx.
    LaguerreCalL { alpha: Vec<f64> },
    /// `L̃_k^α(x)` orthonormal Laguerre polynomials in `γ_α`.
    LaguerrePolynomial { alpha: Vec<f64> },
    /// `p_k^λ(θ) = sin^λ θ · P̃_k^λ(cos θ)` on (0, π), in dθ.
    UltrasphericalFunction { lambda: f64 },
    /// `P̃_k^λ(cos θ)` on (0, π), in `sin^{2λ} θ dθ`.
    UltrasphericalTrig { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisDomain {
    Real,
    HalfLine,
    /// The open interval (0, π).
    Angle,
    /// (−1, 1), for raw Gegenbauer polynomials.
    Symmetric,
}

impl AxisDomain {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            AxisDomain::Real => x.is_finite(),
            AxisDomain::HalfLine => x > 0.0 && x.is_finite(),
            AxisDomain::Angle => x > 0.0 && x < PI,
            AxisDomain::Symmetric => x > -1.0 && x < 1.0,
        }
    }
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Polynomial(f) => match &f.kind {
                PolyKind::Laguerre { alpha } => alpha.len(),
                _ => 1,
            },
            Basis::HermiteFunction { d } | Basis::HermitePolynomial { d } => d.len(),
            Basis::LaguerrePhi { alpha }
            | Basis::LaguerreEll { alpha }
            | Basis::LaguerrePsi { alpha }
            | Basis::LaguerreCalL { alpha }
            | Basis::LaguerrePolynomial { alpha } => alpha.len(),
            Basis::UltrasphericalFunction { .. } | Basis::UltrasphericalTrig { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Basis::Polynomial(f) => {
                PolyFamily::new(f.kind.clone(), f.normalization)?;
            }
            Basis::HermiteFunction { d } | Basis::HermitePolynomial { d } => check_scales(d)?,
            Basis::LaguerrePhi { alpha }
            | Basis::LaguerreEll { alpha }
            | Basis::LaguerrePsi { alpha }
            | Basis::LaguerreCalL { alpha }
            | Basis::LaguerrePolynomial { alpha } => check_alpha(alpha)?,
            Basis::UltrasphericalFunction { lambda } | Basis::UltrasphericalTrig { lambda } => {
                check_lambda(*lambda)?
            }
        }
        Ok(())
    }

    pub fn axis_domain(&self) -> AxisDomain {
        match self {
            Basis::Polynomial(f) => match f.kind {
                PolyKind::Hermite => AxisDomain::Real,
                PolyKind::Laguerre { .. } => AxisDomain::HalfLine,
                PolyKind::Ultraspherical { .. } => AxisDomain::Symmetric,
            },
            Basis::HermiteFunction { .. } | Basis::HermitePolynomial { .. } => AxisDomain::Real,
            Basis::UltrasphericalFunction { .. } | Basis::UltrasphericalTrig { .. } => {
                AxisDomain::Angle
            }
            _ => AxisDomain::HalfLine,
        }
    }

    /// Values of the one-dimensional factor on `axis` for degrees `0..=n_max`.
    pub fn axis_values(&self, axis: usize, n_max: usize, x: f64) -> Vec<f64> {
        let ln2_half = 0.5 * 2f64.ln();
        match self {
            Basis::Polynomial(f) => match (&f.kind, f.normalization) {
                (PolyKind::Hermite, Normalization::Raw) => hermite_raw(n_max, x),
                (PolyKind::Hermite, Normalization::Orthonormal) => {
                    // orthonormal for e^{−x²} dx: divide the π^{−1/2}-normalized family by π^{1/4}
                    let s = PI.powf(-0.25);
                    hermite_orthonormal(n_max, x).into_iter().map(|v| v * s).collect()
                }
                (PolyKind::Laguerre { alpha }, Normalization::Raw) => {
                    laguerre_raw(n_max, alpha[axis], x)
                }
                (PolyKind::Laguerre { alpha }, Normalization::Orthonormal) => {
                    laguerre_orthonormal(n_max, alpha[axis], x)
                }
                (PolyKind::Ultraspherical { lambda }, Normalization::Raw) => {
                    gegenbauer_raw(n_max, *lambda, x)
                }
                (PolyKind::Ultraspherical { lambda }, Normalization::Orthonormal) => {
                    gegenbauer_orthonormal(n_max, *lambda, x)
                }
            },
            Basis::HermiteFunction { d } => {
                let di = d[axis];
                let s = di.powf(0.25);
                hermite_functions(n_max, di.sqrt() * x).into_iter().map(|v| v * s).collect()
            }
            Basis::HermitePolynomial { d } => hermite_orthonormal(n_max, d[axis].sqrt() * x),
            Basis::LaguerrePhi { alpha } => {
                let a = alpha[axis];
                laguerre_ell(n_max, a, x * x, ln2_half + (a + 0.5) * x.ln())
            }
            Basis::LaguerreEll { alpha } => laguerre_ell(n_max, alpha[axis], x, 0.0),
            Basis::LaguerrePsi { alpha } => laguerre_ell(n_max, alpha[axis], x * x, ln2_half),
            Basis::LaguerreCalL { alpha } => {
                let a = alpha[axis];
                laguerre_ell(n_max, a, x, 0.5 * a * x.ln())
            }
            Basis::LaguerrePolynomial { alpha } => laguerre_orthonormal(n_max, alpha[axis], x),
            Basis::UltrasphericalFunction { lambda } => {
                gegenbauer_scaled(n_max, *lambda, x.cos(), lambda * x.sin().ln())
            }
            Basis::UltrasphericalTrig { lambda } => {
                gegenbauer_scaled(n_max, *lambda, x.cos(), 0.0)
            }
        }
    }

    /// Derivatives of the one-dimensional factor, where a closed ladder identity exists.
    pub fn axis_derivatives(&self, axis: usize, n_max: usize, x: f64) -> Option<Vec<f64>> {
        match self {
            Basis::HermiteFunction { d } => {
                let di = d[axis];
                let v = self.axis_values(axis, n_max + 1, x);
                Some(
                    (0..=n_max)
                        .map(|k| {
                            let kf = k as f64;
                            let down = if k == 0 { 0.0 } else { (2.0 * kf).sqrt() * v[k - 1] };
                            0.5 * di.sqrt() * (down - (2.0 * kf + 2.0).sqrt() * v[k + 1])
                        })
                        .collect(),
                )
            }
            Basis::LaguerrePhi { alpha } => {
                let a = alpha[axis];
                let v = self.axis_values(axis, n_max, x);
                let shifted = Basis::LaguerrePhi {
                    alpha: vec![a + 1.0],
                }
                .axis_values(0, n_max, x);
                Some(
                    (0..=n_max)
                        .map(|k| {
                            let down = if k == 0 {
                                0.0
                            } else {
                                2.0 * (k as f64).sqrt() * shifted[k - 1]
                            };
                            -down - (x - (a + 0.5) / x) * v[k]
                        })
                        .collect(),
                )
            }
            Basis::UltrasphericalFunction { lambda } => {
                let l = *lambda;
                let v = self.axis_values(axis, n_max, x);
                let up = Basis::UltrasphericalFunction { lambda: l + 1.0 }.axis_values(0, n_max, x);
                let cot = x.cos() / x.sin();
                Some(
                    (0..=n_max)
                        .map(|k| {
                            let kf = k as f64;
                            let down = if k == 0 {
                                0.0
                            } else {
                                (kf * (kf + 2.0 * l)).sqrt() * up[k - 1]
                            };
                            l * cot * v[k] - down
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }
}

/// Evaluates one member of a basis at a point, validating degree and domain.
pub fn eval_basis(basis: &Basis, k: &[usize], x: &[f64]) -> Result<f64> {
    basis.validate()?;
    let n = basis.dim();
    if k.len() != n || x.len() != n {
        return Err(invalid(format!(
            "basis of dimension {n} got index of length {} and point of length {}",
            k.len(),
            x.len()
        )));
    }
    let total: usize = k.iter().sum();
    if total > MAX_DEGREE {
        return Err(domain(format!("degree |k| = {total} exceeds cap {MAX_DEGREE}")));
    }
    let dom = basis.axis_domain();
    let mut value = 1.0;
    for (axis, (&ki, &xi)) in k.iter().zip(x).enumerate() {
        if !dom.contains(xi) {
            return Err(domain(format!("point coordinate {xi} outside {dom:?}")));
        }
        value *= basis.axis_values(axis, ki, xi)[ki];
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_ground_state() {
        for &x in &[-2.0, -0.3, 0.0, 1.7] {
            let v = eval_basis(&Basis::HermiteFunction { d: vec![1.0] }, &[0], &[x]).unwrap();
            let exact = PI.powf(-0.25) * (-x * x / 2.0).exp();
            assert!((v - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn ultraspherical_odd_member_vanishes_at_half_pi() {
        let v = eval_basis(&Basis::UltrasphericalFunction { lambda: 1.0 }, &[1], &[PI / 2.0]).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn laguerre_phi_ground_state() {
        // L̃_0^α = Γ(α+1)^{−1/2} from ∫₀^∞ x^α e^{−x} dx = Γ(α+1).
        let a: f64 = 0.5;
        let l0 = 1.0 / crate::specfun::gamma::gamma_unchecked(a + 1.0).sqrt();
        for &x in &[0.2, 1.0, 2.5] {
            let v = eval_basis(&Basis::LaguerrePhi { alpha: vec![a] }, &[0], &[x]).unwrap();
            let exact = x.powf(a) * (2.0 * x).sqrt() * (-x * x / 2.0).exp() * l0;
            assert!((v - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn raw_recurrences_match_closed_forms() {
        let x: f64 = 0.37;
        let h = hermite_raw(3, x);
        assert!((h[3] - (8.0 * x.powi(3) - 12.0 * x)).abs() < 1e-14);
        let l = laguerre_raw(2, 0.0, x);
        assert!((l[2] - 0.5 * (x * x - 4.0 * x + 2.0)).abs() < 1e-15);
        let p = gegenbauer_raw(2, 1.0, x);
        assert!((p[2] - (4.0 * x * x - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = Basis::HermiteFunction { d: vec![1.0] };
        assert!(eval_basis(&b, &[501], &[0.0]).is_err());
        let lag = Basis::LaguerreEll { alpha: vec![0.5] };
        assert!(eval_basis(&lag, &[1], &[-1.0]).is_err());
        assert!(eval_basis(&Basis::LaguerreEll { alpha: vec![-1.0] }, &[1], &[1.0]).is_err());
        assert!(eval_basis(&Basis::UltrasphericalTrig { lambda: 0.0 }, &[1], &[1.0]).is_err());
        assert!(eval_basis(&b, &[1, 1], &[0.0]).is_err());
    }

    #[test]
    fn high_degree_stays_finite() {
        let v = hermite_functions(500, 30.0);
        assert!(v.iter().all(|x| x.is_finite()));
        let w = laguerre_ell(500, 2.0, 1500.0, 0.0);
        assert!(w.iter().all(|x| x.is_finite()));
    }
}
