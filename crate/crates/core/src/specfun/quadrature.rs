//! Gauss quadrature rules.
//!
//! Legendre nodes come from Newton iteration on the three-term recurrence. The
//! other classical rules use Golub–Welsch (eigenvalues of the Jacobi matrix),
//! polished by Newton steps, with weights from the Christoffel sum
//! `w_i = 1 / Σ_{k<n} q_k(x_i)²` over orthonormal functions `q_k`. Passing
//! orthonormal *functions* (weight folded in) instead of polynomials yields the
//! "function weights" needed to integrate products of eigenfunctions directly.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use super::orthopoly;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maps a rule on [−1, 1] to [a, b].
    pub fn reseat(&self, a: f64, b: f64) -> QuadratureRule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        QuadratureRule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Cached 16-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre_16() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite Gauss–Legendre: `panels` equal panels of `per_panel` nodes on [a, b].
pub fn composite_legendre(a: f64, b: f64, panels: usize, per_panel: usize) -> QuadratureRule {
    let base = gauss_legendre(per_panel);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let r = base.reseat(lo, lo + h);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    QuadratureRule { nodes, weights }
}

/// Golub–Welsch nodes for the orthonormal recurrence
/// `x q_k = b_{k+1} q_{k+1} + a_k q_k + b_k q_{k−1}`, Newton-polished.
fn jacobi_nodes(n: usize, a: impl Fn(usize) -> f64, b: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jm[(k, k)] = a(k);
        if k + 1 < n {
            let off = b(k + 1);
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            // q_n and q_n' with running rescale; only the ratio matters.
            let (mut q0, mut q1) = (0.0, 1.0);
            let (mut d0, mut d1) = (0.0, 0.0);
            for k in 0..n {
                let bk = if k == 0 { 0.0 } else { b(k) };
                let bn = b(k + 1);
                let q2 = ((*x - a(k)) * q1 - bk * q0) / bn;
                let d2 = ((*x - a(k)) * d1 + q1 - bk * d0) / bn;
                q0 = q1;
                q1 = q2;
                d0 = d1;
                d1 = d2;
                let m = q1.abs().max(d1.abs());
                if m > 1e100 {
                    q0 /= m;
                    q1 /= m;
                    d0 /= m;
                    d1 /= m;
                }
            }
            if d1 == 0.0 {
                break;
            }
            let step = q1 / d1;
            if !step.is_finite() || step.abs() > 1e-6 * (1.0 + x.abs()) {
                break;
            }
            *x -= step;
        }
    }
    nodes
}

fn christoffel(nodes: &[f64], values: impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
    nodes
        .iter()
        .map(|&x| 1.0 / values(x).iter().map(|v| v * v).sum::<f64>())
        .collect()
}

/// Gauss–Hermite nodes with *function* weights: `Σ W_i F(x_i) ≈ ∫ F dx` exactly
/// when `F = e^{−x²}·(polynomial of degree ≤ 2n−1)`.
pub fn gauss_hermite_functions(n: usize) -> QuadratureRule {
    let nodes = jacobi_nodes(n, |_| 0.0, |k| (0.5 * k as f64).sqrt());
    let weights = christoffel(&nodes, |x| orthopoly::hermite_functions(n - 1, x));
    QuadratureRule { nodes, weights }
}

/// Gauss–Hermite rule for the weight `e^{−x²}` (standard weights).
pub fn gauss_hermite(n: usize) -> QuadratureRule {
    let mut r = gauss_hermite_functions(n);
    for (w, &x) in r.weights.iter_mut().zip(&r.nodes) {
        *w *= (-x * x).exp();
    }
    r
}

/// Generalized Gauss–Laguerre nodes with function weights: `Σ W_i F(s_i) ≈ ∫₀^∞ F s^α ds`
/// exactly for `F = e^{−s}·(polynomial of degree ≤ 2n−1)`.
pub fn gauss_laguerre_functions(n: usize, alpha: f64) -> QuadratureRule {
    let nodes = jacobi_nodes(
        n,
        |k| 2.0 * k as f64 + alpha + 1.0,
        |k| (k as f64 * (k as f64 + alpha)).sqrt(),
    );
    let weights = christoffel(&nodes, |s| orthopoly::laguerre_ell(n - 1, alpha, s, 0.0));
    QuadratureRule { nodes, weights }
}

/// Generalized Gauss–Laguerre rule for the weight `s^α e^{−s}`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> QuadratureRule {
    let nodes = jacobi_nodes(
        n,
        |k| 2.0 * k as f64 + alpha + 1.0,
        |k| (k as f64 * (k as f64 + alpha)).sqrt(),
    );
    let weights = christoffel(&nodes, |s| orthopoly::laguerre_orthonormal(n - 1, alpha, s));
    QuadratureRule { nodes, weights }
}

/// Gauss–Gegenbauer rule on (−1, 1) for the weight `(1 − x²)^{λ−1/2}`.
pub fn gauss_gegenbauer(n: usize, lambda: f64) -> QuadratureRule {
    let nodes = jacobi_nodes(n, |_| 0.0, |k| orthopoly::gegenbauer_offdiag(k, lambda));
    let weights = christoffel(&nodes, |x| orthopoly::gegenbauer_orthonormal(n - 1, lambda, x));
    QuadratureRule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma::gamma_unchecked;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(10);
        for deg in 0..20 {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = r.integrate(|x| x.powi(deg));
            assert!((got - exact).abs() < 1e-14, "deg {deg}");
        }
        assert!((gauss_legendre(7).weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite(20);
        // ∫ x^{2m} e^{−x²} dx = Γ(m + 1/2)
        for m in 0..15 {
            let got = r.integrate(|x| x.powi(2 * m));
            let exact = gamma_unchecked(m as f64 + 0.5);
            assert!(((got - exact) / exact).abs() < 1e-12, "m {m}");
        }
    }

    #[test]
    fn laguerre_moments() {
        let alpha = 0.5;
        let r = gauss_laguerre(25, alpha);
        for m in 0..30 {
            let got = r.integrate(|s| s.powi(m));
            let exact = gamma_unchecked(m as f64 + alpha + 1.0);
            assert!(((got - exact) / exact).abs() < 1e-11, "m {m}");
        }
    }

    #[test]
    fn gegenbauer_total_mass() {
        let lambda = 1.5;
        let r = gauss_gegenbauer(12, lambda);
        let mass = PI.sqrt() * gamma_unchecked(lambda + 0.5) / gamma_unchecked(lambda + 1.0);
        assert!((r.weights.iter().sum::<f64>() - mass).abs() < 1e-13);
        // ∫ x² (1−x²) dx = 4/15 for λ = 3/2
        assert!((r.integrate(|x| x * x) - 4.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn large_hermite_rule_is_finite() {
        let r = gauss_hermite_functions(300);
        assert!(r.weights.iter().all(|w| w.is_finite() && *w > 0.0));
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }
}
