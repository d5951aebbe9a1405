//! Bessel functions of the first kind `J_ν` and modified second kind `K_σ`.

use std::f64::consts::PI;

use super::gamma::{gamma_unchecked, ln_gamma_unchecked};
use super::quadrature::gauss_legendre_16;
use crate::error::{domain, Result};

/// Largest order accepted by [`bessel_j`].
pub const J_MAX_ORDER: f64 = 10.0;
/// Largest argument accepted by [`bessel_j`]. Accuracy is specified on (0, 50];
/// the Hankel machinery needs larger arguments, which the asymptotic branch covers.
pub const J_MAX_ARG: f64 = 5000.0;

const SERIES_MAX_ARG: f64 = 8.0;

/// `J_ν(x)` for `ν ∈ [−1/2, 10]`, `x ∈ (0, 5000]`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(-0.5..=J_MAX_ORDER).contains(&nu) {
        return Err(domain(format!("bessel_j order {nu} outside [-1/2, {J_MAX_ORDER}]")));
    }
    if !(x > 0.0 && x <= J_MAX_ARG) {
        return Err(domain(format!("bessel_j argument {x} outside (0, {J_MAX_ARG}]")));
    }
    Ok(bessel_j_unchecked(nu, x))
}

pub(crate) fn bessel_j_unchecked(nu: f64, x: f64) -> f64 {
    if x <= SERIES_MAX_ARG {
        j_series(nu, x)
    } else if x >= asymptotic_threshold(nu) {
        j_asymptotic(nu, x)
    } else {
        j_miller(nu, x)
    }
}

fn asymptotic_threshold(nu: f64) -> f64 {
    40.0 + 2.0 * nu * nu
}

fn j_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // (x/2)^ν / Γ(ν+1), with ν+1 ≥ 1/2 so the Gamma factor is positive.
    let mut term = (nu * half.ln() - ln_gamma_unchecked(nu + 1.0)).exp();
    let mut sum = term;
    for m in 1..200 {
        let mf = m as f64;
        term *= q / (mf * (mf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn j_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..400 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // a_k / x^k enters P (even k) and Q (odd k) with alternating signs.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn j_miller(nu: f64, x: f64) -> f64 {
    // Work on the ladder μ, μ+1, …; for ν < 0 (only ν ∈ [−1/2, 0)) take one extra
    // downward step from μ = ν + 1.
    let (mu, steps_up, extra_down) = if nu < 0.0 {
        (nu + 1.0, 0usize, true)
    } else {
        let fl = nu.floor();
        (nu - fl, fl as usize, false)
    };
    let top = ((x.max(nu) + 20.0 + 8.0 * x.cbrt()).ceil() as usize + 2) & !1;
    let mut vals = vec![0.0f64; top + 2];
    vals[top + 1] = 0.0;
    vals[top] = 1e-30;
    for n in (0..top).rev() {
        let order = mu + (n + 1) as f64;
        vals[n] = 2.0 * order / x * vals[n + 1] - vals[n + 2];
        if vals[n].abs() > 1e250 {
            for v in vals[n..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = if mu == 0.0 {
        let mut s = vals[0];
        let mut n = 2;
        while n <= top {
            s += 2.0 * vals[n];
            n += 2;
        }
        s
    } else {
        let mut s = 0.0;
        let mut c = gamma_unchecked(mu);
        let mut k = 0usize;
        while 2 * k <= top {
            if k > 0 {
                c *= (mu + k as f64 - 1.0) / k as f64;
            }
            s += (mu + 2.0 * k as f64) * c * vals[2 * k];
            k += 1;
        }
        s / (0.5 * x).powf(mu)
    };
    if extra_down {
        let below = 2.0 * mu / x * vals[0] - vals[1];
        below / norm
    } else {
        vals[steps_up] / norm
    }
}

/// Exponentially scaled `e^z K_σ(z)` for `σ ∈ (0, 1]`, `z > 0`.
///
/// Evaluated from `∫₀^∞ e^{−z(cosh t − 1)} cosh(σt) dt`, truncated at `t = 40`
/// (and earlier once the integrand is below `e^{−750}`), on 16-point Gauss–Legendre panels.
pub fn bessel_k_scaled(sigma: f64, z: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(domain(format!("bessel_k order {sigma} outside (0, 1]")));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(domain(format!("bessel_k argument {z} must be positive")));
    }
    Ok(bessel_k_scaled_unchecked(sigma, z))
}

pub(crate) fn bessel_k_scaled_unchecked(sigma: f64, z: f64) -> f64 {
    let rule = gauss_legendre_16();
    let width = (2.0 / z.sqrt()).min(1.0);
    let mut a = 0.0;
    let mut total = 0.0;
    while a < 40.0 {
        let b = (a + width).min(40.0);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut panel = 0.0;
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            let t = mid + half * s;
            // cosh t − 1 = 2 sinh²(t/2) avoids cancellation near t = 0.
            let sh = (0.5 * t).sinh();
            let expo = -z * 2.0 * sh * sh;
            panel += w * (expo + sigma * t).exp() * 0.5 * (1.0 + (-2.0 * sigma * t).exp());
        }
        total += half * panel;
        let sh = (0.5 * b).sinh();
        if z * 2.0 * sh * sh - sigma * b > 750.0 {
            break;
        }
        a = b;
    }
    total
}

/// `K_σ(z)` for `σ ∈ (0, 1]`, `z > 0`. Underflows to 0 for `z ≳ 745`.
pub fn bessel_k(sigma: f64, z: f64) -> Result<f64> {
    Ok(bessel_k_scaled(sigma, z)? * (-z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_integer_closed_forms() {
        let mut x = 0.05;
        while x <= 50.0 {
            let pref = (2.0 / (PI * x)).sqrt();
            let jm = bessel_j(-0.5, x).unwrap();
            let jp = bessel_j(0.5, x).unwrap();
            // absolute error scaled by the envelope: relative error is meaningless at zeros
            assert!((jm - pref * x.cos()).abs() <= 1e-10 * pref, "J_-1/2({x})");
            assert!((jp - pref * x.sin()).abs() <= 1e-10 * pref, "J_1/2({x})");
            let j32 = bessel_j(1.5, x).unwrap();
            let exact = pref * (x.sin() / x - x.cos());
            assert!((j32 - exact).abs() <= 1e-10 * pref, "J_3/2({x}) {j32} vs {exact}");
            x += 0.173;
        }
    }

    #[test]
    fn branches_agree_at_switch_points() {
        for &nu in &[0.0, 0.3, 1.0, 2.5, 7.0, 10.0] {
            let s = SERIES_MAX_ARG;
            assert!((j_series(nu, s) - j_miller(nu, s)).abs() < 1e-13, "nu={nu}");
            let a = asymptotic_threshold(nu);
            assert!((j_asymptotic(nu, a) - j_miller(nu, a)).abs() < 1e-12, "nu={nu}");
        }
    }

    #[test]
    fn first_zero_of_j0_by_bisection() {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if j_series(0.0, lo) * j_series(0.0, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lo - 2.404825557695773).abs() < 1e-12);
        assert!(bessel_j(0.0, 2.404825557695773).unwrap().abs() < 1e-9);
    }

    #[test]
    fn recurrence_identity() {
        // J_{ν−1} + J_{ν+1} = (2ν/x) J_ν
        for &nu in &[0.5, 1.0, 3.3, 9.0] {
            for &x in &[0.7, 5.0, 12.0, 33.0, 49.0, 120.0] {
                let l = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
                let r = 2.0 * nu / x * bessel_j(nu, x).unwrap();
                assert!((l - r).abs() < 1e-11, "nu={nu} x={x}: {l} {r}");
            }
        }
    }

    #[test]
    fn window_rejections() {
        assert!(bessel_j(-0.6, 1.0).is_err());
        assert!(bessel_j(10.5, 1.0).is_err());
        assert!(bessel_j(1.0, 0.0).is_err());
        assert!(bessel_k(0.0, 1.0).is_err());
        assert!(bessel_k(0.5, -1.0).is_err());
    }

    #[test]
    fn k_half_closed_form() {
        for &z in &[1e-4, 0.01, 0.3, 1.0, 4.0, 30.0, 300.0] {
            let exact = (PI / (2.0 * z)).sqrt();
            assert!(rel(bessel_k_scaled(0.5, z).unwrap(), exact) < 1e-12, "z={z}");
        }
        assert!(rel(bessel_k(0.5, 2.0).unwrap(), (PI / 4.0).sqrt() * (-2.0f64).exp()) < 1e-12);
    }

    #[test]
    fn k_matches_independent_integral() {
        // Oracle: K_σ(z) = ½ (z/2)^σ ∫₀^∞ e^{−t − z²/(4t)} t^{−σ−1} dt, integrated on t = e^s.
        for &(sigma, z) in &[(0.3f64, 1.0f64), (0.7, 0.2), (0.9, 3.0), (0.15, 0.05)] {
            let h = 1e-3;
            let mut acc = 0.0;
            let mut s: f64 = -40.0;
            while s < 10.0 {
                let t: f64 = s.exp();
                acc += h * (-t - z * z / (4.0 * t) - sigma * s).exp();
                s += h;
            }
            let oracle = 0.5 * (0.5 * z).powf(sigma) * acc;
            assert!(rel(bessel_k(sigma, z).unwrap(), oracle) < 1e-8, "σ={sigma} z={z}");
        }
    }

    #[test]
    fn k_small_argument_asymptotic() {
        let sigma = 0.7;
        let limit = 2f64.powf(sigma - 1.0) * gamma_unchecked(sigma);
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&z: &f64| z.powf(sigma) * bessel_k(sigma, z).unwrap() / limit)
            .collect();
        assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
        assert!((ratios[2] - 1.0).abs() < 1e-3);
    }
}
