//! Numerical witnesses for the defining properties of a system.

use serde::Serialize;

use super::SpectralSystem;
use crate::error::{invalid, Result};

/// Relative L² residual of `Lφ_k = λ_kφ_k` on `points`.
///
/// Tensor systems apply a fourth-order finite-difference realization of the
/// differential operator; grid systems use their assembled matrix on the nodes.
pub fn eigen_residual(system: &SpectralSystem, k: usize, points: &[Vec<f64>], h: f64) -> Result<f64> {
    if k >= system.len() {
        return Err(invalid(format!("mode {k} beyond truncation {}", system.len())));
    }
    let lambda = system.eigenvalues()[k];
    if let (Some(m), Some(v)) = (system.grid_matrix(), system.grid_vectors()) {
        let col = v.column(k);
        let mv = m * col;
        let num: f64 = mv.iter().zip(col.iter()).map(|(a, b)| (a - lambda * b).powi(2)).sum();
        let den: f64 = col.iter().map(|b| (lambda.max(1.0) * b).powi(2)).sum();
        return Ok((num / den).sqrt());
    }
    let phi = |x: &[f64]| system.eval_modes_unchecked(x)[k];
    let (mut num, mut den, mut base) = (0.0, 0.0, 0.0);
    for p in points {
        system.check_point(p)?;
        let v = phi(p);
        let lv = system.apply_operator(&phi, p, h)?;
        num += (lv - lambda * v).powi(2);
        den += (lambda * v).powi(2);
        base += v * v;
    }
    Ok((num / den.max(base)).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeGrowth {
    /// Fitted exponents ε for derivative orders 0, 1, 2.
    pub epsilon: [f64; 3],
    /// `sup_K |D^β φ_k|` per order, for `k = 1..=k_max`.
    pub sup_norms: [Vec<f64>; 3],
}

/// Fits `sup_K |D^β φ_k| ≈ C k^ε` on `[k_max/4, k_max]` for a one-dimensional system.
pub fn derivative_growth(system: &SpectralSystem, lo: f64, hi: f64, k_max: usize) -> Result<DerivativeGrowth> {
    if system.dim() != 1 || k_max + 1 > system.len() || k_max < 8 {
        return Err(invalid("derivative growth needs a 1D tensor system with at least k_max+1 ≥ 9 modes"));
    }
    let grid: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let mut sups = [vec![0.0; k_max], vec![0.0; k_max], vec![0.0; k_max]];
    for &x in &grid {
        system.check_point(&[x])?;
        let v = system
            .axis_values(0, x)
            .ok_or_else(|| invalid("derivative growth needs a tensor system"))?;
        let (d1, d2) = system.axis_derivative_tables(0, x).unwrap();
        for k in 1..=k_max {
            sups[0][k - 1] = f64::max(sups[0][k - 1], v[k].abs());
            sups[1][k - 1] = f64::max(sups[1][k - 1], d1[k].abs());
            sups[2][k - 1] = f64::max(sups[2][k - 1], d2[k].abs());
        }
    }
    let fit = |s: &[f64]| {
        let pts: Vec<(f64, f64)> = (k_max / 4..=k_max)
            .map(|k| ((k as f64).ln(), s[k - 1].max(1e-300).ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(DerivativeGrowth {
        epsilon: [fit(&sups[0]), fit(&sups[1]), fit(&sups[2])],
        sup_norms: sups,
    })
}
