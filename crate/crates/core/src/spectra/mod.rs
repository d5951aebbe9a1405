//! Operator catalog: every operator as a [`SpectralSystem`] with analysis and synthesis.
//!
//! Tensor-product systems (closed-form eigenfunctions, Dirichlet sines, Hankel and
//! Fourier kernels) analyze by sum factorization over a tensor quadrature grid.
//! The finite-difference operator is eigendecomposed densely.

mod axis;
mod checks;
mod fd;
mod grid;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::specfun::orthopoly::{check_alpha, check_lambda, check_scales, Basis, MAX_DEGREE};
use crate::specfun::J_MAX_ORDER;
use axis::{basis_rule, oscillatory_rule, Axis, AxisKind};
use fd::FdOperator;

pub use checks::{derivative_growth, eigen_residual, DerivativeGrowth};
pub use fd::{FdSpec, Field};
pub use grid::GridFunction;
pub(crate) use grid::fmt as fmt_f64;

/// Catalog identifiers with their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemKind {
    /// `−d²/dx²` on (a, b) with Dirichlet conditions.
    DirichletInterval { a: f64, b: f64 },
    /// `−div(a∇) + V` on a 1D/2D grid, Dirichlet rows.
    DivergenceFormFd(FdSpec),
    /// `H_D = −Δ + |D x|²`, eigenvalues `2k·d + Σd_i`.
    HarmonicOscillator { d: Vec<f64> },
    /// `H_D − Σd_i`, eigenvalues `2k·d`.
    HermiteShifted { d: Vec<f64> },
    /// `O_B = −Δ + 2Bx·∇` in `γ_B`, with `B = AᵗDA` when a rotation `A` is given.
    OrnsteinUhlenbeck {
        d: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
    },
    /// Laguerre functions `φ_k^α` in dx, eigenvalues `k + (α+1)/2` per axis.
    LaguerrePhi { alpha: Vec<f64> },
    /// `ℓ_k^α` in `x^α dx`.
    LaguerreEll { alpha: Vec<f64> },
    /// `ψ_k^α` in `x^{2α+1} dx`.
    LaguerrePsi { alpha: Vec<f64> },
    /// `𝓛_k^α` in dx.
    LaguerreCalL { alpha: Vec<f64> },
    /// Laguerre polynomial operator in `x^α e^{−x} dx`, eigenvalues `k`.
    LaguerrePolynomial { alpha: Vec<f64> },
    /// `l_λ = −d²/dθ² + λ(λ−1)/sin²θ` on (0, π), eigenvalues `(k+λ)²`.
    UltrasphericalL { lambda: f64 },
    /// `L_λ = −d²/dθ² − 2λ cot θ d/dθ + λ²` in `sin^{2λ}θ dθ`.
    UltrasphericalTrig { lambda: f64 },
    /// `S_λ = −d²/dx² + λ(λ−1)/x²` on (0, ∞), continuous spectrum ξ².
    BesselS { lambda: f64 },
    /// `Δ_λ = −d²/dx² − (2λ/x) d/dx` in `x^{2λ} dx`.
    BesselDelta { lambda: f64 },
    /// `−Δ` on ℝⁿ (n ∈ {1, 2}) through a real cosine/sine Fourier basis.
    FourierLaplacian { n: usize },
}

impl SystemKind {
    pub fn id(&self) -> &'static str {
        match self {
            SystemKind::DirichletInterval { .. } => "dirichlet_interval",
            SystemKind::DivergenceFormFd(_) => "divergence_form_fd",
            SystemKind::HarmonicOscillator { .. } => "harmonic_oscillator",
            SystemKind::HermiteShifted { .. } => "hermite_shifted",
            SystemKind::OrnsteinUhlenbeck { .. } => "ornstein_uhlenbeck",
            SystemKind::LaguerrePhi { .. } => "laguerre_phi",
            SystemKind::LaguerreEll { .. } => "laguerre_ell",
            SystemKind::LaguerrePsi { .. } => "laguerre_psi",
            SystemKind::LaguerreCalL { .. } => "laguerre_cal_l",
            SystemKind::LaguerrePolynomial { .. } => "laguerre_polynomial",
            SystemKind::UltrasphericalL { .. } => "ultraspherical_l",
            SystemKind::UltrasphericalTrig { .. } => "ultraspherical_trig",
            SystemKind::BesselS { .. } => "bessel_s",
            SystemKind::BesselDelta { .. } => "bessel_delta",
            SystemKind::FourierLaplacian { .. } => "fourier_laplacian",
        }
    }

    /// One representative of every catalog entry with default parameters.
    pub fn examples() -> Vec<SystemKind> {
        vec![
            SystemKind::DirichletInterval { a: 0.0, b: PI },
            SystemKind::DivergenceFormFd(FdSpec::uniform(0.0, PI, 127)),
            SystemKind::HarmonicOscillator { d: vec![1.0] },
            SystemKind::HermiteShifted { d: vec![1.0] },
            SystemKind::OrnsteinUhlenbeck {
                d: vec![1.0],
                rotation: None,
            },
            SystemKind::LaguerrePhi { alpha: vec![0.5] },
            SystemKind::LaguerreEll { alpha: vec![0.5] },
            SystemKind::LaguerrePsi { alpha: vec![0.5] },
            SystemKind::LaguerreCalL { alpha: vec![0.5] },
            SystemKind::LaguerrePolynomial { alpha: vec![0.5] },
            SystemKind::UltrasphericalL { lambda: 1.5 },
            SystemKind::UltrasphericalTrig { lambda: 1.5 },
            SystemKind::BesselS { lambda: 0.5 },
            SystemKind::BesselDelta { lambda: 0.5 },
            SystemKind::FourierLaplacian { n: 1 },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Discrete,
    Continuous,
}

/// Truncation and quadrature controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Truncation {
    /// Modes per axis for discrete systems.
    pub modes: usize,
    /// Quadrature nodes per axis; defaults depend on the system.
    pub quad_nodes: Option<usize>,
    /// Spectral cutoff Ξ for continuous systems.
    pub xi_max: f64,
    /// Spatial cutoff for continuous systems.
    pub x_max: Option<f64>,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            modes: 64,
            quad_nodes: None,
            xi_max: 40.0,
            x_max: None,
        }
    }
}

impl Truncation {
    pub fn modes(modes: usize) -> Self {
        Truncation {
            modes,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
enum Structure {
    Tensor {
        axes: Vec<Axis>,
        /// Orthogonal `A`; eigenfunctions are evaluated at `s = A x`.
        rotation: Option<Vec<Vec<f64>>>,
    },
    Grid(FdOperator),
}

/// An operator with its (generalized) eigenbasis, measure and analysis quadrature.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    kind: SystemKind,
    truncation: Truncation,
    structure: Structure,
    eigenvalues: Vec<f64>,
    spectral_weights: Vec<f64>,
    shape: Vec<usize>,
    quad_points: Vec<Vec<f64>>,
    quad_weights: Vec<f64>,
}

/// Expansion coefficients in a system's basis, with the Parseval defect of the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub values: Vec<f64>,
    /// `‖f‖² − Σ w_k c_k²` for the analyzed input (0 for coefficients built directly).
    pub parseval_defect: f64,
    /// `‖f‖²` of the analyzed input.
    pub input_norm_sq: f64,
}

impl Coefficients {
    pub fn from_values(values: Vec<f64>) -> Self {
        Coefficients {
            values,
            parseval_defect: 0.0,
            input_norm_sq: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mode-wise multiplier `c_k ↦ g(k) c_k`, keeping the defect bookkeeping.
    pub fn map(&self, g: impl Fn(usize, f64) -> f64) -> Coefficients {
        Coefficients {
            values: self.values.iter().enumerate().map(|(k, &c)| g(k, c)).collect(),
            ..self.clone()
        }
    }

    /// Relative Parseval defect; errors when it exceeds `tol`.
    pub fn check_parseval(&self, tol: f64) -> Result<()> {
        let rel = if self.input_norm_sq > 0.0 {
            self.parseval_defect.abs() / self.input_norm_sq
        } else {
            0.0
        };
        if rel > tol {
            return Err(Error::Tolerance {
                what: "Parseval defect (quadrature order insufficient)".into(),
                measured: rel,
                allowed: tol,
            });
        }
        Ok(())
    }
}

fn check_rotation(a: &[Vec<f64>], n: usize) -> Result<()> {
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("rotation must be {n}×{n}")));
    }
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| a[k][i] * a[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if (dot - target).abs() > 1e-10 {
                return Err(invalid("rotation matrix is not orthogonal"));
            }
        }
    }
    Ok(())
}

/// Builds a catalog system.
pub fn make_system(kind: SystemKind, truncation: Truncation) -> Result<SpectralSystem> {
    let k = truncation.modes;
    if k == 0 || k > MAX_DEGREE + 1 {
        return Err(invalid(format!("mode count {k} outside [1, {}]", MAX_DEGREE + 1)));
    }
    if !(truncation.xi_max > 0.0) {
        return Err(invalid("spectral cutoff Ξ must be positive"));
    }
    let q = truncation.quad_nodes.unwrap_or(2 * k + 16);
    if q < k {
        return Err(invalid(format!("{q} quadrature nodes cannot resolve {k} modes")));
    }
    let discrete = |basis: Basis, n: usize, eig: &dyn Fn(usize, usize) -> f64| -> Vec<Axis> {
        (0..n)
            .map(|ax| {
                let rule = basis_rule(&basis, ax, q);
                let dom = basis.axis_domain();
                let (lo, hi) = match dom {
                    crate::specfun::orthopoly::AxisDomain::Real => (f64::NEG_INFINITY, f64::INFINITY),
                    crate::specfun::orthopoly::AxisDomain::HalfLine => (0.0, f64::INFINITY),
                    _ => (0.0, PI),
                };
                Axis::new(
                    AxisKind::Basis(basis.clone(), ax),
                    (0..k).map(|j| eig(ax, j)).collect(),
                    vec![1.0; k],
                    rule,
                    lo,
                    hi,
                )
            })
            .collect()
    };
    let mut rotation = None;
    let axes: Vec<Axis> = match &kind {
        SystemKind::DirichletInterval { a, b } => {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(invalid(format!("interval ({a}, {b}) is empty or unbounded")));
            }
            let len = b - a;
            let rule = oscillatory_rule(*a, *b, 2.0 * k as f64 * PI / len);
            vec![Axis::new(
                AxisKind::Dirichlet { a: *a, b: *b },
                (1..=k).map(|j| (j as f64 * PI / len).powi(2)).collect(),
                vec![1.0; k],
                rule,
                *a,
                *b,
            )]
        }
        SystemKind::DivergenceFormFd(spec) => {
            let keep = k.pow(spec.nodes.len() as u32);
            let op = FdOperator::new(spec.clone(), keep)?;
            return Ok(SpectralSystem::from_grid(kind.clone(), truncation, op));
        }
        SystemKind::HarmonicOscillator { d } => {
            check_scales(d)?;
            discrete(Basis::HermiteFunction { d: d.clone() }, d.len(), &|ax, j| {
                2.0 * j as f64 * d[ax] + d[ax]
            })
        }
        SystemKind::HermiteShifted { d } => {
            check_scales(d)?;
            discrete(Basis::HermiteFunction { d: d.clone() }, d.len(), &|ax, j| {
                2.0 * j as f64 * d[ax]
            })
        }
        SystemKind::OrnsteinUhlenbeck { d, rotation: rot } => {
            check_scales(d)?;
            if let Some(a) = rot {
                check_rotation(a, d.len())?;
                rotation = Some(a.clone());
            }
            discrete(Basis::HermitePolynomial { d: d.clone() }, d.len(), &|ax, j| {
                2.0 * j as f64 * d[ax]
            })
        }
        SystemKind::LaguerrePhi { alpha }
        | SystemKind::LaguerreEll { alpha }
        | SystemKind::LaguerrePsi { alpha }
        | SystemKind::LaguerreCalL { alpha }
        | SystemKind::LaguerrePolynomial { alpha } => {
            check_alpha(alpha)?;
            let a = alpha.clone();
            let basis = match &kind {
                SystemKind::LaguerrePhi { .. } => Basis::LaguerrePhi { alpha: a },
                SystemKind::LaguerreEll { .. } => Basis::LaguerreEll { alpha: a },
                SystemKind::LaguerrePsi { .. } => Basis::LaguerrePsi { alpha: a },
                SystemKind::LaguerreCalL { .. } => Basis::LaguerreCalL { alpha: a },
                _ => Basis::LaguerrePolynomial { alpha: a },
            };
            let poly = matches!(kind, SystemKind::LaguerrePolynomial { .. });
            discrete(basis, alpha.len(), &|ax, j| {
                if poly {
                    j as f64
                } else {
                    j as f64 + 0.5 * (alpha[ax] + 1.0)
                }
            })
        }
        SystemKind::UltrasphericalL { lambda } | SystemKind::UltrasphericalTrig { lambda } => {
            check_lambda(*lambda)?;
            let basis = if matches!(kind, SystemKind::UltrasphericalL { .. }) {
                Basis::UltrasphericalFunction { lambda: *lambda }
            } else {
                Basis::UltrasphericalTrig { lambda: *lambda }
            };
            discrete(basis, 1, &|_, j| (j as f64 + lambda).powi(2))
        }
        SystemKind::BesselS { lambda } | SystemKind::BesselDelta { lambda } => {
            if !(*lambda > 0.0 && lambda - 0.5 <= J_MAX_ORDER) {
                return Err(invalid(format!(
                    "Bessel type λ = {lambda} outside (0, {}]",
                    J_MAX_ORDER + 0.5
                )));
            }
            let xi_max = truncation.xi_max;
            let x_max = truncation.x_max.unwrap_or(12.0);
            let xi_rule = oscillatory_rule(0.0, xi_max, x_max);
            let x_rule = oscillatory_rule(0.0, x_max, xi_max);
            let delta = matches!(kind, SystemKind::BesselDelta { .. });
            let quad = if delta {
                let (nodes, weights) = x_rule
                    .nodes
                    .iter()
                    .zip(&x_rule.weights)
                    .map(|(&x, &w)| (x, w * x.powf(2.0 * lambda)))
                    .unzip();
                crate::specfun::quadrature::QuadratureRule { nodes, weights }
            } else {
                x_rule
            };
            vec![Axis::new(
                AxisKind::Hankel {
                    lambda: *lambda,
                    delta,
                    xi: xi_rule.nodes.clone(),
                },
                xi_rule.nodes.iter().map(|s| s * s).collect(),
                xi_rule.weights.clone(),
                quad,
                0.0,
                f64::INFINITY,
            )]
        }
        SystemKind::FourierLaplacian { n } => {
            if !(1..=2).contains(n) {
                return Err(invalid(format!("Fourier realization supports n ∈ {{1, 2}}, got {n}")));
            }
            let xi_max = truncation.xi_max;
            let x_max = truncation.x_max.unwrap_or(if *n == 1 { 12.0 } else { 6.0 });
            let xi_rule = oscillatory_rule(0.0, xi_max, x_max);
            let x_rule = oscillatory_rule(-x_max, x_max, xi_max);
            let doubled = |v: &[f64]| v.iter().flat_map(|&x| [x, x]).collect::<Vec<f64>>();
            (0..*n)
                .map(|_| {
                    Axis::new(
                        AxisKind::Fourier {
                            xi: xi_rule.nodes.clone(),
                        },
                        doubled(&xi_rule.nodes.iter().map(|s| s * s).collect::<Vec<_>>()),
                        doubled(&xi_rule.weights),
                        x_rule.clone(),
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                    )
                })
                .collect()
        }
    };
    Ok(SpectralSystem::from_axes(kind, truncation, axes, rotation))
}

fn tensor_flat<T: Copy>(
    per_axis: &[&[T]],
    combine: impl Fn(&[T]) -> T,
) -> Vec<T> {
    let shape: Vec<usize> = per_axis.iter().map(|v| v.len()).collect();
    let total: usize = shape.iter().product();
    (0..total)
        .map(|flat| {
            let idx = fd::unflatten(flat, &shape);
            let parts: Vec<T> = idx.iter().enumerate().map(|(ax, &i)| per_axis[ax][i]).collect();
            combine(&parts)
        })
        .collect()
}

/// Contracts axis `ax` of a row-major array of shape `dims` with a `m × dims[ax]` matrix.
fn contract(data: &[f64], dims: &[usize], ax: usize, mat: &[f64], m: usize) -> Vec<f64> {
    let q = dims[ax];
    let outer: usize = dims[..ax].iter().product();
    let inner: usize = dims[ax + 1..].iter().product();
    let mut out = vec![0.0; outer * m * inner];
    for o in 0..outer {
        for k in 0..m {
            let row = &mat[k * q..(k + 1) * q];
            let dst = &mut out[(o * m + k) * inner..(o * m + k + 1) * inner];
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let src = &data[(o * q + j) * inner..(o * q + j + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }
    out
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

fn mat_t_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|j| (0..x.len()).map(|i| a[i][j] * x[i]).sum()).collect()
}

impl SpectralSystem {
    fn from_axes(
        kind: SystemKind,
        truncation: Truncation,
        axes: Vec<Axis>,
        rotation: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let eig: Vec<&[f64]> = axes.iter().map(|a| a.eigenvalues.as_slice()).collect();
        let eigenvalues = tensor_flat(&eig, |p| p.iter().sum());
        let sw: Vec<&[f64]> = axes.iter().map(|a| a.spectral_weights.as_slice()).collect();
        let spectral_weights = tensor_flat(&sw, |p| p.iter().product());
        let shape = axes.iter().map(|a| a.modes()).collect();
        let qshape: Vec<usize> = axes.iter().map(|a| a.quad.len()).collect();
        let total: usize = qshape.iter().product();
        let mut quad_points = Vec::with_capacity(total);
        let mut quad_weights = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = fd::unflatten(flat, &qshape);
            let s: Vec<f64> = idx.iter().enumerate().map(|(ax, &i)| axes[ax].quad.nodes[i]).collect();
            let w: f64 = idx.iter().enumerate().map(|(ax, &i)| axes[ax].quad.weights[i]).product();
            quad_points.push(match &rotation {
                Some(a) => mat_t_vec(a, &s),
                None => s,
            });
            quad_weights.push(w);
        }
        SpectralSystem {
            kind,
            truncation,
            structure: Structure::Tensor { axes, rotation },
            eigenvalues,
            spectral_weights,
            shape,
            quad_points,
            quad_weights,
        }
    }

    fn from_grid(kind: SystemKind, truncation: Truncation, op: FdOperator) -> Self {
        let m = op.eigenvalues.len();
        SpectralSystem {
            kind,
            truncation,
            eigenvalues: op.eigenvalues.clone(),
            spectral_weights: vec![1.0; m],
            shape: vec![m],
            quad_points: op.points.clone(),
            quad_weights: vec![op.cell; op.points.len()],
            structure: Structure::Grid(op),
        }
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    pub fn dim(&self) -> usize {
        match &self.structure {
            Structure::Tensor { axes, .. } => axes.len(),
            Structure::Grid(op) => op.spec.dim(),
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn spectral_weights(&self) -> &[f64] {
        &self.spectral_weights
    }

    /// Modes per axis (tensor systems) or retained eigenpairs (grid systems).
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Multi-index of flat mode `k` (last axis fastest).
    pub fn mode_index(&self, k: usize) -> Vec<usize> {
        fd::unflatten(k, &self.shape)
    }

    pub fn flavor(&self) -> Flavor {
        match &self.structure {
            Structure::Tensor { axes, .. }
                if axes.iter().any(|a| {
                    matches!(a.kind, AxisKind::Hankel { .. } | AxisKind::Fourier { .. })
                }) =>
            {
                Flavor::Continuous
            }
            _ => Flavor::Discrete,
        }
    }

    /// Declared growth `λ_k ∼ |k|^c` (discrete systems).
    pub fn growth_exponent(&self) -> Option<f64> {
        match &self.kind {
            SystemKind::DirichletInterval { .. }
            | SystemKind::UltrasphericalL { .. }
            | SystemKind::UltrasphericalTrig { .. } => Some(2.0),
            SystemKind::DivergenceFormFd(spec) => Some(2.0 / spec.dim() as f64),
            SystemKind::BesselS { .. }
            | SystemKind::BesselDelta { .. }
            | SystemKind::FourierLaplacian { .. } => None,
            _ => Some(1.0),
        }
    }

    /// Whether `e^{−tL}` preserves positivity. Every catalog operator does: the
    /// Schrödinger-type ones by Trotter–Kato, the conjugated ones because the
    /// transference factor `M` is positive, the grid operator because it is an M-matrix.
    pub fn positivity_preserving(&self) -> bool {
        true
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match &self.structure {
            Structure::Tensor { axes, rotation } => {
                let s = self.to_spectral_coords(x, rotation);
                axes.iter().zip(&s).all(|(a, &v)| a.contains(v))
            }
            Structure::Grid(op) => op.contains(x),
        }
    }

    fn to_spectral_coords(&self, x: &[f64], rotation: &Option<Vec<Vec<f64>>>) -> Vec<f64> {
        match rotation {
            Some(a) => matvec(a, x),
            None => x.to_vec(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if !self.contains(x) {
            return Err(crate::error::domain(format!(
                "point {x:?} outside the domain of {}",
                self.kind.id()
            )));
        }
        Ok(())
    }

    /// Density η of the measure dη = η dx.
    pub fn density(&self, x: &[f64]) -> f64 {
        match &self.structure {
            Structure::Tensor { axes, rotation } => {
                let s = self.to_spectral_coords(x, rotation);
                axes.iter().zip(&s).map(|(a, &v)| a.density(v)).product()
            }
            Structure::Grid(_) => 1.0,
        }
    }

    pub fn quadrature_points(&self) -> &[Vec<f64>] {
        &self.quad_points
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// The analysis quadrature as a grid function carrying `f`'s samples.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> GridFunction {
        let values = self.quad_points.par_iter().map(|p| f(p)).collect();
        GridFunction {
            points: self.quad_points.clone(),
            values,
            weights: self.quad_weights.clone(),
        }
    }

    /// Values of every mode at `x`.
    pub fn eval_modes(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.eval_modes_unchecked(x))
    }

    fn eval_modes_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.structure {
            Structure::Tensor { axes, rotation } => {
                let s = self.to_spectral_coords(x, rotation);
                let vals: Vec<Vec<f64>> = axes.iter().zip(&s).map(|(a, &v)| a.values(v)).collect();
                let refs: Vec<&[f64]> = vals.iter().map(|v| v.as_slice()).collect();
                tensor_flat(&refs, |p| p.iter().product())
            }
            Structure::Grid(op) => op.values(x),
        }
    }

    /// Coefficients of `f` by the system's analysis quadrature.
    pub fn analyze(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> Coefficients {
        let samples: Vec<f64> = self.quad_points.par_iter().map(|p| f(p)).collect();
        self.analyze_samples(&samples)
    }

    /// Coefficients from samples at [`SpectralSystem::quadrature_points`].
    pub fn analyze_samples(&self, samples: &[f64]) -> Coefficients {
        assert_eq!(samples.len(), self.quad_points.len(), "sample count mismatch");
        let values = match &self.structure {
            Structure::Tensor { axes, .. } => {
                let mut dims: Vec<usize> = axes.iter().map(|a| a.quad.len()).collect();
                let mut data = samples.to_vec();
                for ax in (0..axes.len()).rev() {
                    data = contract(&data, &dims, ax, &axes[ax].analysis, axes[ax].modes());
                    dims[ax] = axes[ax].modes();
                }
                data
            }
            Structure::Grid(op) => (0..op.vectors.ncols())
                .map(|c| {
                    samples
                        .iter()
                        .enumerate()
                        .map(|(r, f)| op.cell * op.vectors[(r, c)] * f)
                        .sum()
                })
                .collect(),
        };
        let input_norm_sq: f64 =
            samples.iter().zip(&self.quad_weights).map(|(f, w)| w * f * f).sum();
        self.with_defect(values, input_norm_sq)
    }

    fn with_defect(&self, values: Vec<f64>, input_norm_sq: f64) -> Coefficients {
        let c = Coefficients::from_values(values);
        let captured = self.norm_sq(&c);
        Coefficients {
            parseval_defect: input_norm_sq - captured,
            input_norm_sq,
            ..c
        }
    }

    /// Coefficients of a sampled function using the grid's own points and weights.
    pub fn analyze_grid(&self, f: &GridFunction) -> Result<Coefficients> {
        f.validate()?;
        if f.dim() != self.dim() {
            return Err(invalid(format!(
                "grid of dimension {} for a system of dimension {}",
                f.dim(),
                self.dim()
            )));
        }
        for p in &f.points {
            self.check_point(p)?;
        }
        let rows: Vec<Vec<f64>> = f
            .points
            .par_iter()
            .zip(&f.values)
            .zip(&f.weights)
            .map(|((p, v), w)| {
                self.eval_modes_unchecked(p)
                    .into_iter()
                    .map(|phi| w * v * phi)
                    .collect()
            })
            .collect();
        let mut values = vec![0.0; self.len()];
        for r in &rows {
            for (acc, x) in values.iter_mut().zip(r) {
                *acc += x;
            }
        }
        Ok(self.with_defect(values, f.norm_sq()))
    }

    pub fn check_coefficients(&self, c: &Coefficients) -> Result<()> {
        if c.len() != self.len() {
            return Err(invalid(format!(
                "{} coefficients for a system with {} modes",
                c.len(),
                self.len()
            )));
        }
        if let Some(v) = c.values.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite coefficient {v}")));
        }
        Ok(())
    }

    /// `Σ w_k c_k²`.
    pub fn norm_sq(&self, c: &Coefficients) -> f64 {
        c.values.iter().zip(&self.spectral_weights).map(|(v, w)| w * v * v).sum()
    }

    /// `‖a − b‖ / ‖b‖` in the spectral norm.
    pub fn relative_distance(&self, a: &Coefficients, b: &Coefficients) -> f64 {
        let diff = Coefficients::from_values(
            a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
        );
        let nb = self.norm_sq(b);
        let nd = self.norm_sq(&diff);
        if nb == 0.0 {
            nd.sqrt()
        } else {
            (nd / nb).sqrt()
        }
    }

    pub fn unit(&self, k: usize) -> Coefficients {
        let mut v = vec![0.0; self.len()];
        v[k] = 1.0;
        Coefficients::from_values(v)
    }

    /// Flat index of a multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.shape.len() || idx.iter().zip(&self.shape).any(|(i, s)| i >= s) {
            return None;
        }
        Some(idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i))
    }

    /// `Σ w_k c_k φ_k(x)` at one point.
    pub fn synthesize_at(&self, c: &Coefficients, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.synth_unchecked(c, x))
    }

    fn synth_unchecked(&self, c: &Coefficients, x: &[f64]) -> f64 {
        match &self.structure {
            Structure::Tensor { axes, rotation } => {
                let s = self.to_spectral_coords(x, rotation);
                let wc: Vec<f64> =
                    c.values.iter().zip(&self.spectral_weights).map(|(v, w)| v * w).collect();
                let mut dims = self.shape.clone();
                let mut data = wc;
                for ax in (0..axes.len()).rev() {
                    let row = axes[ax].values(s[ax]);
                    data = contract(&data, &dims, ax, &row, 1);
                    dims[ax] = 1;
                }
                data[0]
            }
            Structure::Grid(op) => {
                op.values(x).iter().zip(&c.values).map(|(p, v)| p * v).sum()
            }
        }
    }

    /// Synthesis at many points.
    pub fn synthesize(&self, c: &Coefficients, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_coefficients(c)?;
        for p in points {
            self.check_point(p)?;
        }
        Ok(points.par_iter().map(|p| self.synth_unchecked(c, p)).collect())
    }

    /// Gradient of the synthesized function at `x`.
    pub fn synthesize_gradient(&self, c: &Coefficients, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        match &self.structure {
            Structure::Tensor { axes, rotation } => {
                let s = self.to_spectral_coords(x, rotation);
                let vals: Vec<Vec<f64>> = axes.iter().zip(&s).map(|(a, &v)| a.values(v)).collect();
                let ders: Vec<Vec<f64>> =
                    axes.iter().zip(&s).map(|(a, &v)| a.derivatives(v)).collect();
                let wc: Vec<f64> =
                    c.values.iter().zip(&self.spectral_weights).map(|(v, w)| v * w).collect();
                let grad_s: Vec<f64> = (0..axes.len())
                    .map(|target| {
                        let mut dims = self.shape.clone();
                        let mut data = wc.clone();
                        for ax in (0..axes.len()).rev() {
                            let row = if ax == target { &ders[ax] } else { &vals[ax] };
                            data = contract(&data, &dims, ax, row, 1);
                            dims[ax] = 1;
                        }
                        data[0]
                    })
                    .collect();
                Ok(match rotation {
                    Some(a) => mat_t_vec(a, &grad_s),
                    None => grad_s,
                })
            }
            Structure::Grid(op) => Ok((0..x.len())
                .map(|ax| {
                    let h = 1e-6 * (op.spec.upper[ax] - op.spec.lower[ax]);
                    let (mut p, mut m) = (x.to_vec(), x.to_vec());
                    p[ax] += h;
                    m[ax] -= h;
                    (self.synth_unchecked(c, &p) - self.synth_unchecked(c, &m)) / (2.0 * h)
                })
                .collect()),
        }
    }

    /// Finite-difference realization of the differential operator applied to `u` at `x`
    /// (tensor systems only).
    pub fn apply_operator(&self, u: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<f64> {
        let n = self.dim();
        let Structure::Tensor { rotation, .. } = &self.structure else {
            return Err(invalid("grid systems are realized by their assembled matrix"));
        };
        let shifted = |ax: usize, t: f64| {
            let mut p = x.to_vec();
            p[ax] += t;
            u(&p)
        };
        let d1 = |ax: usize| {
            (-shifted(ax, 2.0 * h) + 8.0 * shifted(ax, h) - 8.0 * shifted(ax, -h)
                + shifted(ax, -2.0 * h))
                / (12.0 * h)
        };
        let d2 = |ax: usize| {
            (-shifted(ax, 2.0 * h) + 16.0 * shifted(ax, h) - 30.0 * u(x) + 16.0 * shifted(ax, -h)
                - shifted(ax, -2.0 * h))
                / (12.0 * h * h)
        };
        if let (SystemKind::OrnsteinUhlenbeck { d, .. }, Some(a)) = (&self.kind, rotation) {
            // O_B u = −Δu + 2 Bx·∇u,  B = AᵗDA
            let ax_ = matvec(a, x);
            let dax: Vec<f64> = ax_.iter().zip(d).map(|(v, di)| v * di).collect();
            let bx = mat_t_vec(a, &dax);
            let lap: f64 = (0..n).map(d2).sum();
            let drift: f64 = (0..n).map(|i| 2.0 * bx[i] * d1(i)).sum();
            return Ok(-lap + drift);
        }
        let v = u(x);
        let mut total = 0.0;
        for ax in 0..n {
            let (a2, a1, a0) = axis_operator(&self.kind, ax, x[ax]);
            total += -a2 * d2(ax) - a1 * d1(ax) + a0 * v;
        }
        Ok(total)
    }

    /// Dense matrix of a grid system (for residual checks).
    pub fn grid_matrix(&self) -> Option<&nalgebra::DMatrix<f64>> {
        match &self.structure {
            Structure::Grid(op) => Some(&op.matrix),
            _ => None,
        }
    }

    /// Eigenvectors of a grid system as node values (columns, `Σ cell·v² = 1`).
    pub fn grid_vectors(&self) -> Option<&nalgebra::DMatrix<f64>> {
        match &self.structure {
            Structure::Grid(op) => Some(&op.vectors),
            _ => None,
        }
    }

    pub(crate) fn axis_values(&self, ax: usize, x: f64) -> Option<Vec<f64>> {
        match &self.structure {
            Structure::Tensor { axes, .. } => Some(axes[ax].values(x)),
            _ => None,
        }
    }

    pub(crate) fn axis_derivative_tables(&self, ax: usize, x: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.structure {
            Structure::Tensor { axes, .. } => {
                Some((axes[ax].derivatives(x), axes[ax].second_derivatives(x)))
            }
            _ => None,
        }
    }

    /// JSON description for catalogs and provenance.
    pub fn describe(&self) -> serde_json::Value {
        let lead: Vec<f64> = self.eigenvalues.iter().take(6).copied().collect();
        serde_json::json!({
            "id": self.kind.id(),
            "params": self.kind,
            "dim": self.dim(),
            "flavor": self.flavor(),
            "modes": self.len(),
            "quadrature_nodes": self.quad_points.len(),
            "growth_exponent": self.growth_exponent(),
            "positivity_preserving": self.positivity_preserving(),
            "leading_eigenvalues": lead,
        })
    }
}

/// 1D operator `−a₂u'' − a₁u' + a₀u` along one axis.
fn axis_operator(kind: &SystemKind, ax: usize, x: f64) -> (f64, f64, f64) {
    match kind {
        SystemKind::DirichletInterval { .. } | SystemKind::FourierLaplacian { .. } => {
            (1.0, 0.0, 0.0)
        }
        SystemKind::HarmonicOscillator { d } => (1.0, 0.0, d[ax] * d[ax] * x * x),
        SystemKind::HermiteShifted { d } => (1.0, 0.0, d[ax] * d[ax] * x * x - d[ax]),
        SystemKind::OrnsteinUhlenbeck { d, .. } => (1.0, -2.0 * d[ax] * x, 0.0),
        SystemKind::LaguerrePhi { alpha } => {
            let a = alpha[ax];
            (0.25, 0.0, 0.25 * (x * x + (a * a - 0.25) / (x * x)))
        }
        SystemKind::LaguerreEll { alpha } => (x, alpha[ax] + 1.0, 0.25 * x),
        SystemKind::LaguerrePsi { alpha } => {
            (0.25, (2.0 * alpha[ax] + 1.0) / (4.0 * x), 0.25 * x * x)
        }
        SystemKind::LaguerreCalL { alpha } => {
            let a = alpha[ax];
            (x, 1.0, 0.25 * x + a * a / (4.0 * x))
        }
        SystemKind::LaguerrePolynomial { alpha } => (x, alpha[ax] + 1.0 - x, 0.0),
        SystemKind::UltrasphericalL { lambda } => {
            (1.0, 0.0, lambda * (lambda - 1.0) / x.sin().powi(2))
        }
        SystemKind::UltrasphericalTrig { lambda } => {
            (1.0, 2.0 * lambda * x.cos() / x.sin(), lambda * lambda)
        }
        SystemKind::BesselS { lambda } => (1.0, 0.0, lambda * (lambda - 1.0) / (x * x)),
        SystemKind::BesselDelta { lambda } => (1.0, 2.0 * lambda / x, 0.0),
        SystemKind::DivergenceFormFd(_) => (1.0, 0.0, 0.0),
    }
}
