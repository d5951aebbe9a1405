//! One-dimensional factors of tensor-product spectral systems.

use std::f64::consts::PI;

use crate::specfun::orthopoly::Basis;
use crate::specfun::quadrature::{
    composite_legendre, gauss_gegenbauer, gauss_hermite, gauss_hermite_functions,
    gauss_laguerre, gauss_laguerre_functions, QuadratureRule,
};
use crate::specfun::bessel_j_unchecked;

#[derive(Debug, Clone)]
pub(crate) enum AxisKind {
    /// Axis `axis` of a closed-form basis.
    Basis(Basis, usize),
    /// `√(2/L) sin(kπ(x−a)/L)`, k ≥ 1.
    Dirichlet { a: f64, b: f64 },
    /// `ψ_ξ(x) = (ξx)^{1/2} J_{λ−1/2}(ξx)`, or `x^{−λ}ψ_ξ` when `delta`.
    Hankel { lambda: f64, delta: bool, xi: Vec<f64> },
    /// `cos(ξx)/√π` (even slots) and `sin(ξx)/√π` (odd slots).
    Fourier { xi: Vec<f64> },
}

#[derive(Debug, Clone)]
pub(crate) struct Axis {
    pub kind: AxisKind,
    pub eigenvalues: Vec<f64>,
    /// 1 for discrete modes, the ξ-quadrature weight for continuous ones.
    pub spectral_weights: Vec<f64>,
    /// Analysis rule in this axis' measure.
    pub quad: QuadratureRule,
    pub lower: f64,
    pub upper: f64,
    /// Row-major `modes × nodes` matrix `w_i φ_k(x_i)`.
    pub analysis: Vec<f64>,
}

impl Axis {
    pub fn new(
        kind: AxisKind,
        eigenvalues: Vec<f64>,
        spectral_weights: Vec<f64>,
        quad: QuadratureRule,
        lower: f64,
        upper: f64,
    ) -> Self {
        let mut axis = Axis {
            kind,
            eigenvalues,
            spectral_weights,
            quad,
            lower,
            upper,
            analysis: Vec::new(),
        };
        let m = axis.modes();
        let q = axis.quad.len();
        let mut analysis = vec![0.0; m * q];
        for (i, (&x, &w)) in axis.quad.nodes.iter().zip(&axis.quad.weights).enumerate() {
            for (k, v) in axis.values(x).into_iter().enumerate() {
                analysis[k * q + i] = w * v;
            }
        }
        axis.analysis = analysis;
        axis
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x > self.lower && x < self.upper
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let m = self.modes();
        match &self.kind {
            AxisKind::Basis(b, axis) => b.axis_values(*axis, m - 1, x),
            AxisKind::Dirichlet { a, b } => {
                let len = b - a;
                let c = (2.0 / len).sqrt();
                (1..=m).map(|k| c * (k as f64 * PI * (x - a) / len).sin()).collect()
            }
            AxisKind::Hankel { lambda, delta, xi } => {
                let nu = lambda - 0.5;
                let pre = if *delta { x.powf(-lambda) } else { 1.0 };
                xi.iter()
                    .map(|&s| {
                        let z = s * x;
                        pre * z.sqrt() * bessel_j_unchecked(nu, z)
                    })
                    .collect()
            }
            AxisKind::Fourier { xi } => {
                let c = 1.0 / PI.sqrt();
                let mut out = Vec::with_capacity(m);
                for &s in xi {
                    let (sn, cs) = (s * x).sin_cos();
                    out.push(c * cs);
                    out.push(c * sn);
                }
                out
            }
        }
    }

    /// First derivatives, in closed form where available, else a fourth-order stencil.
    pub fn derivatives(&self, x: f64) -> Vec<f64> {
        let m = self.modes();
        match &self.kind {
            AxisKind::Basis(b, axis) => {
                if let Some(d) = b.axis_derivatives(*axis, m - 1, x) {
                    return d;
                }
            }
            AxisKind::Dirichlet { a, b } => {
                let len = b - a;
                let c = (2.0 / len).sqrt();
                return (1..=m)
                    .map(|k| {
                        let w = k as f64 * PI / len;
                        c * w * (w * (x - a)).cos()
                    })
                    .collect();
            }
            AxisKind::Fourier { xi } => {
                let c = 1.0 / PI.sqrt();
                let mut out = Vec::with_capacity(m);
                for &s in xi {
                    let (sn, cs) = (s * x).sin_cos();
                    out.push(-c * s * sn);
                    out.push(c * s * cs);
                }
                return out;
            }
            AxisKind::Hankel { .. } => {}
        }
        let h = self.stencil_step(x);
        let (p2, p1, m1, m2) = (
            self.values(x + 2.0 * h),
            self.values(x + h),
            self.values(x - h),
            self.values(x - 2.0 * h),
        );
        (0..m)
            .map(|k| (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * h))
            .collect()
    }

    /// Second derivatives by a fourth-order stencil.
    pub fn second_derivatives(&self, x: f64) -> Vec<f64> {
        let m = self.modes();
        let h = self.stencil_step(x);
        let v: Vec<Vec<f64>> = (-2..=2).map(|j| self.values(x + j as f64 * h)).collect();
        (0..m)
            .map(|k| {
                (-v[0][k] + 16.0 * v[1][k] - 30.0 * v[2][k] + 16.0 * v[3][k] - v[4][k])
                    / (12.0 * h * h)
            })
            .collect()
    }

    fn stencil_step(&self, x: f64) -> f64 {
        let mut h = 1e-3;
        while !(self.contains(x - 2.0 * h) && self.contains(x + 2.0 * h)) && h > 1e-12 {
            h *= 0.25;
        }
        h
    }

    /// Density of this axis' measure against dx.
    pub fn density(&self, x: f64) -> f64 {
        match &self.kind {
            AxisKind::Basis(b, axis) => match b {
                Basis::HermitePolynomial { d } => {
                    let di = d[*axis];
                    (di / PI).sqrt() * (-di * x * x).exp()
                }
                Basis::LaguerreEll { alpha } => x.powf(alpha[*axis]),
                Basis::LaguerrePsi { alpha } => x.powf(2.0 * alpha[*axis] + 1.0),
                Basis::LaguerrePolynomial { alpha } => x.powf(alpha[*axis]) * (-x).exp(),
                Basis::UltrasphericalTrig { lambda } => x.sin().powf(2.0 * lambda),
                _ => 1.0,
            },
            AxisKind::Hankel {
                lambda,
                delta: true,
                ..
            } => x.powf(2.0 * lambda),
            _ => 1.0,
        }
    }
}

/// Analysis rule with `n` nodes in the measure of `basis` along `axis`.
pub(crate) fn basis_rule(basis: &Basis, axis: usize, n: usize) -> QuadratureRule {
    let map = |r: QuadratureRule, f: &dyn Fn(f64, f64) -> (f64, f64)| {
        let (nodes, weights) = r.nodes.iter().zip(&r.weights).map(|(&x, &w)| f(x, w)).unzip();
        QuadratureRule { nodes, weights }
    };
    match basis {
        Basis::HermiteFunction { d } => {
            let s = d[axis].sqrt();
            map(gauss_hermite_functions(n), &|x, w| (x / s, w / s))
        }
        Basis::HermitePolynomial { d } => {
            let s = d[axis].sqrt();
            map(gauss_hermite(n), &|x, w| (x / s, w / PI.sqrt()))
        }
        Basis::LaguerrePhi { alpha } => {
            let a = alpha[axis];
            map(gauss_laguerre_functions(n, a), &|s, w| {
                (s.sqrt(), w / (2.0 * s.sqrt() * s.powf(a)))
            })
        }
        Basis::LaguerreEll { alpha } => gauss_laguerre_functions(n, alpha[axis]),
        Basis::LaguerrePsi { alpha } => {
            map(gauss_laguerre_functions(n, alpha[axis]), &|s, w| (s.sqrt(), 0.5 * w))
        }
        Basis::LaguerreCalL { alpha } => {
            let a = alpha[axis];
            map(gauss_laguerre_functions(n, a), &|s, w| (s, w / s.powf(a)))
        }
        Basis::LaguerrePolynomial { alpha } => gauss_laguerre(n, alpha[axis]),
        Basis::UltrasphericalFunction { lambda } => {
            let l = *lambda;
            map(gauss_gegenbauer(n, l), &|x, w| {
                let t = x.acos();
                (t, w / t.sin().powf(2.0 * l))
            })
        }
        Basis::UltrasphericalTrig { lambda } => {
            map(gauss_gegenbauer(n, *lambda), &|x, w| (x.acos(), w))
        }
        Basis::Polynomial(_) => unreachable!("plain polynomial families are not operator systems"),
    }
}

/// Composite Gauss–Legendre on [a, b] resolving oscillations up to angular frequency `omega`.
pub(crate) fn oscillatory_rule(a: f64, b: f64, omega: f64) -> QuadratureRule {
    let panels = (((b - a) * omega / 10.0).ceil() as usize).max(4);
    composite_legendre(a, b, panels, 16)
}
