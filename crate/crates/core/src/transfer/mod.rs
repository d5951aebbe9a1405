//! Transference `(U∘W)f(x) = M(x) f(h(x))` between pairs of catalog systems.
//!
//! Convention: the map carries functions of the *source* system `L̄` (on `Ω̄`) to functions
//! of the *target* system `L` (on `Ω`), and source eigenfunctions to target eigenfunctions,
//! so `L̄ = (U∘W)^{−1} (L − shift) (U∘W)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fracops::check_sigma;
use crate::specfun::quadrature::gauss_legendre_16;
use crate::spectra::{make_system, Coefficients, SpectralSystem, SystemKind, Truncation};

/// Catalog pair identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pair", rename_all = "snake_case")]
pub enum PairId {
    /// Ornstein–Uhlenbeck `O_D` → shifted Hermite `H_D − Σd_i`.
    OuHermite { d: Vec<f64> },
    /// Rotated Ornstein–Uhlenbeck `O_B`, `B = AᵗDA`, → diagonal `O_D`; `A` is a plane rotation.
    Rotation { d: [f64; 2], angle: f64 },
    /// `ℓ^α` → `φ^α`.
    LaguerreEll { alpha: f64 },
    /// `ψ^α` → `φ^α`.
    LaguerrePsi { alpha: f64 },
    /// `𝓛^α` → `φ^α`.
    LaguerreCalL { alpha: f64 },
    /// Laguerre polynomial operator → `φ^α`, eigenvalues shifted by `(α+1)/2`.
    LaguerrePolynomials { alpha: f64 },
    /// `L_λ` in `sin^{2λ}θ dθ` → `l_λ` in dθ.
    Ultraspherical { lambda: f64 },
    /// `Δ_λ` in `x^{2λ} dx` → `S_λ` in dx.
    Bessel { lambda: f64 },
}

impl PairId {
    pub fn id(&self) -> &'static str {
        match self {
            PairId::OuHermite { .. } => "ou_hermite",
            PairId::Rotation { .. } => "rotation",
            PairId::LaguerreEll { .. } => "laguerre_ell",
            PairId::LaguerrePsi { .. } => "laguerre_psi",
            PairId::LaguerreCalL { .. } => "laguerre_cal_l",
            PairId::LaguerrePolynomials { .. } => "laguerre_polynomials",
            PairId::Ultraspherical { .. } => "ultraspherical",
            PairId::Bessel { .. } => "bessel",
        }
    }

    /// One representative of each of the eight pairs.
    pub fn examples() -> Vec<PairId> {
        vec![
            PairId::OuHermite { d: vec![1.0] },
            PairId::Rotation {
                d: [1.0, 2.5],
                angle: 0.6,
            },
            PairId::LaguerreEll { alpha: 0.5 },
            PairId::LaguerrePsi { alpha: 0.5 },
            PairId::LaguerreCalL { alpha: 0.5 },
            PairId::LaguerrePolynomials { alpha: 0.5 },
            PairId::Ultraspherical { lambda: 1.5 },
            PairId::Bessel { lambda: 0.75 },
        ]
    }

    pub fn from_name(name: &str) -> Result<PairId> {
        PairId::examples()
            .into_iter()
            .find(|p| p.id() == name)
            .ok_or_else(|| crate::Error::Unknown(format!("transference pair '{name}'")))
    }
}

pub fn rotation_matrix(angle: f64) -> Vec<Vec<f64>> {
    let (s, c) = angle.sin_cos();
    vec![vec![c, -s], vec![s, c]]
}

/// `(M, h, h^{−1}, |J_{h^{−1}}|)` with source and target systems and eigenvalue bookkeeping.
#[derive(Debug, Clone)]
pub struct TransferenceMap {
    pub pair: PairId,
    pub source: SystemKind,
    pub target: SystemKind,
    /// `λ_target − λ_source` for corresponding eigenfunctions.
    pub eigenvalue_shift: f64,
    pub source_measure: &'static str,
    pub target_measure: &'static str,
    pub dim: usize,
}

fn check_positive(name: &str, v: f64, lower: f64) -> Result<()> {
    if !(v > lower && v.is_finite()) {
        return Err(invalid(format!("{name} = {v} must exceed {lower}")));
    }
    Ok(())
}

pub fn catalog(pair: &PairId) -> Result<TransferenceMap> {
    let one = |source, target, shift, sm, tm| TransferenceMap {
        pair: pair.clone(),
        source,
        target,
        eigenvalue_shift: shift,
        source_measure: sm,
        target_measure: tm,
        dim: 1,
    };
    Ok(match pair {
        PairId::OuHermite { d } => {
            for &di in d {
                check_positive("d", di, 0.0)?;
            }
            TransferenceMap {
                dim: d.len(),
                ..one(
                    SystemKind::OrnsteinUhlenbeck {
                        d: d.clone(),
                        rotation: None,
                    },
                    SystemKind::HermiteShifted { d: d.clone() },
                    0.0,
                    "gamma_D(x) dx = Π (d_i/π)^{1/2} e^{−d_i x_i²} dx",
                    "dx",
                )
            }
        }
        PairId::Rotation { d, angle } => {
            check_positive("d0", d[0], 0.0)?;
            check_positive("d1", d[1], 0.0)?;
            TransferenceMap {
                dim: 2,
                ..one(
                    SystemKind::OrnsteinUhlenbeck {
                        d: d.to_vec(),
                        rotation: Some(rotation_matrix(*angle)),
                    },
                    SystemKind::OrnsteinUhlenbeck {
                        d: d.to_vec(),
                        rotation: None,
                    },
                    0.0,
                    "gamma_B(x) dx, B = AᵗDA",
                    "gamma_D(x) dx",
                )
            }
        }
        PairId::LaguerreEll { alpha } => {
            check_positive("alpha", *alpha, -1.0)?;
            one(
                SystemKind::LaguerreEll { alpha: vec![*alpha] },
                SystemKind::LaguerrePhi { alpha: vec![*alpha] },
                0.0,
                "x^α dx",
                "dx",
            )
        }
        PairId::LaguerrePsi { alpha } => {
            check_positive("alpha", *alpha, -1.0)?;
            one(
                SystemKind::LaguerrePsi { alpha: vec![*alpha] },
                SystemKind::LaguerrePhi { alpha: vec![*alpha] },
                0.0,
                "x^{2α+1} dx",
                "dx",
            )
        }
        PairId::LaguerreCalL { alpha } => {
            check_positive("alpha", *alpha, -1.0)?;
            one(
                SystemKind::LaguerreCalL { alpha: vec![*alpha] },
                SystemKind::LaguerrePhi { alpha: vec![*alpha] },
                0.0,
                "dx",
                "dx",
            )
        }
        PairId::LaguerrePolynomials { alpha } => {
            check_positive("alpha", *alpha, -1.0)?;
            one(
                SystemKind::LaguerrePolynomial { alpha: vec![*alpha] },
                SystemKind::LaguerrePhi { alpha: vec![*alpha] },
                0.5 * (alpha + 1.0),
                "x^α e^{−x} dx",
                "dx",
            )
        }
        PairId::Ultraspherical { lambda } => {
            check_positive("lambda", *lambda, 0.0)?;
            one(
                SystemKind::UltrasphericalTrig { lambda: *lambda },
                SystemKind::UltrasphericalL { lambda: *lambda },
                0.0,
                "sin^{2λ}θ dθ",
                "dθ",
            )
        }
        PairId::Bessel { lambda } => {
            check_positive("lambda", *lambda, -0.5)?;
            one(
                SystemKind::BesselDelta { lambda: *lambda },
                SystemKind::BesselS { lambda: *lambda },
                0.0,
                "x^{2λ} dx",
                "dx",
            )
        }
    })
}

impl TransferenceMap {
    /// `M(x)` on the target domain.
    pub fn m(&self, x: &[f64]) -> f64 {
        match &self.pair {
            PairId::OuHermite { d } => d
                .iter()
                .zip(x)
                .map(|(&di, &xi)| (di / PI).powf(0.25) * (-0.5 * di * xi * xi).exp())
                .product(),
            PairId::Rotation { .. } => 1.0,
            PairId::LaguerreEll { alpha } => 2f64.sqrt() * x[0].powf(alpha + 0.5),
            PairId::LaguerrePsi { alpha } => x[0].powf(alpha + 0.5),
            PairId::LaguerreCalL { .. } => (2.0 * x[0]).sqrt(),
            PairId::LaguerrePolynomials { alpha } => {
                2f64.sqrt() * (-0.5 * x[0] * x[0]).exp() * x[0].powf(alpha + 0.5)
            }
            PairId::Ultraspherical { lambda } => x[0].sin().powf(*lambda),
            PairId::Bessel { lambda } => x[0].powf(*lambda),
        }
    }

    /// `h: Ω → Ω̄`.
    pub fn h(&self, x: &[f64]) -> Vec<f64> {
        match &self.pair {
            PairId::Rotation { angle, .. } => {
                let a = rotation_matrix(*angle);
                // Aᵗx
                vec![a[0][0] * x[0] + a[1][0] * x[1], a[0][1] * x[0] + a[1][1] * x[1]]
            }
            PairId::LaguerreEll { .. } | PairId::LaguerreCalL { .. } | PairId::LaguerrePolynomials { .. } => {
                vec![x[0] * x[0]]
            }
            _ => x.to_vec(),
        }
    }

    pub fn h_inv(&self, xb: &[f64]) -> Vec<f64> {
        match &self.pair {
            PairId::Rotation { angle, .. } => {
                let a = rotation_matrix(*angle);
                vec![a[0][0] * xb[0] + a[0][1] * xb[1], a[1][0] * xb[0] + a[1][1] * xb[1]]
            }
            PairId::LaguerreEll { .. } | PairId::LaguerreCalL { .. } | PairId::LaguerrePolynomials { .. } => {
                vec![xb[0].sqrt()]
            }
            _ => xb.to_vec(),
        }
    }

    /// `|J_{h^{−1}}|(x̄)`.
    pub fn jacobian_inv(&self, xb: &[f64]) -> f64 {
        match &self.pair {
            PairId::LaguerreEll { .. } | PairId::LaguerreCalL { .. } | PairId::LaguerrePolynomials { .. } => {
                0.5 / xb[0].sqrt()
            }
            _ => 1.0,
        }
    }

    /// `M(x) f(h(x))`.
    pub fn apply(&self, f: impl Fn(&[f64]) -> Result<f64>, x: &[f64]) -> Result<f64> {
        Ok(self.m(x) * f(&self.h(x))?)
    }

    /// `g(h^{−1}(x̄)) / M(h^{−1}(x̄))`.
    pub fn inverse(&self, g: impl Fn(&[f64]) -> Result<f64>, xb: &[f64]) -> Result<f64> {
        let x = self.h_inv(xb);
        Ok(g(&x)? / self.m(&x))
    }

    pub fn systems(&self, truncation: &Truncation) -> Result<(SpectralSystem, SpectralSystem)> {
        Ok((
            make_system(self.source.clone(), truncation.clone())?,
            make_system(self.target.clone(), truncation.clone())?,
        ))
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.pair, PairId::Bessel { .. })
    }

    /// `max |h^{−1}(h(x)) − x|` and `max |inverse(apply f) − f| / (1 + |f|)` over `points`.
    pub fn involution_defect(&self, f: impl Fn(&[f64]) -> f64, points: &[Vec<f64>]) -> Result<(f64, f64)> {
        let (mut dh, mut df) = (0.0f64, 0.0f64);
        for x in points {
            let back = self.h_inv(&self.h(x));
            dh = dh.max(back.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            let xb = self.h(x);
            let forward = |y: &[f64]| self.apply(|z| Ok(f(z)), y);
            let v = self.inverse(forward, &xb)?;
            df = df.max((v - f(&xb)).abs() / (1.0 + f(&xb).abs()));
        }
        Ok((dh, df))
    }
}

/// Gram matrix of `{(U∘W)φ̄_k}_{k<n}` in the target measure, by the target system's quadrature;
/// for the continuous Bessel pair the orthonormal family is `ψ^{λ−1/2}` in `x^{2λ}dx`.
pub fn gram_defect(map: &TransferenceMap, n: usize) -> Result<f64> {
    let modes = n.max(8);
    let trunc = Truncation {
        quad_nodes: Some(4 * modes + 40),
        ..Truncation::modes(modes)
    };
    let target = make_system(map.target.clone(), trunc.clone())?;
    let family = match &map.pair {
        PairId::Bessel { lambda } => make_system(
            SystemKind::LaguerrePsi {
                alpha: vec![lambda - 0.5],
            },
            Truncation::modes(modes),
        )?,
        _ => make_system(map.source.clone(), Truncation::modes(modes))?,
    };
    let indices: Vec<usize> = if map.dim == 1 {
        (0..n).collect()
    } else {
        // lowest total degrees of the 2D family
        let mut idx: Vec<(usize, usize)> = (0..family.len())
            .map(|k| (k, family.shape()[1]))
            .map(|(k, s)| (k, k / s + k % s))
            .collect();
        idx.sort_by_key(|&(k, deg)| (deg, k));
        idx.into_iter().take(n).map(|(k, _)| k).collect()
    };
    let (pts, wts) = if map.is_continuous() {
        // mapped functions behave like x^{2λ} at 0: geometric panels towards the origin
        graded_rule(12.0, 48)
    } else {
        (target.quadrature_points().to_vec(), target.quadrature_weights().to_vec())
    };
    let rows = pts
        .iter()
        .map(|x| {
            let vals = family.eval_modes(&map.h(x))?;
            let m = map.m(x);
            Ok(indices.iter().map(|&k| m * vals[k]).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for a in 0..indices.len() {
        for b in 0..=a {
            let g: f64 = rows.iter().zip(&wts).map(|(r, w)| w * r[a] * r[b]).sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - expect).abs());
        }
    }
    Ok(worst)
}

fn graded_rule(x_max: f64, levels: i32) -> (Vec<Vec<f64>>, Vec<f64>) {
    let base = gauss_legendre_16();
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    let uniform = (0..44).map(|i| {
        let h = (x_max - 1.0) / 44.0;
        (1.0 + i as f64 * h, 1.0 + (i + 1) as f64 * h)
    });
    let geometric = (0..levels).map(|k| (0.5f64.powi(k + 1), 0.5f64.powi(k)));
    for (a, b) in uniform.chain(geometric) {
        let r = base.reseat(a, b);
        pts.extend(r.nodes.iter().map(|&x| vec![x]));
        wts.extend_from_slice(&r.weights);
    }
    (pts, wts)
}

#[derive(Debug, Clone, Serialize)]
pub struct IntertwiningReport {
    pub pair: String,
    pub sigma: f64,
    /// Relative `L²(dη̄)` gap between `L̄^σ f` and `(U∘W)^{−1} L^σ (U∘W) f`.
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Both sides of the intertwining identity on the source quadrature, each through its own
/// system: the left by `L̄`'s spectrum, the right by analysing `(U∘W)f` in the target system,
/// applying `(λ − shift)^σ` there and pulling back.
pub fn verify_intertwining(
    map: &TransferenceMap,
    source: &SpectralSystem,
    target: &SpectralSystem,
    sigma: f64,
    f: &Coefficients,
) -> Result<IntertwiningReport> {
    check_sigma(sigma)?;
    if source.kind() != &map.source || target.kind() != &map.target {
        return Err(invalid("systems do not match the transference pair"));
    }
    source.check_coefficients(f)?;
    let lam_s = source.eigenvalues();
    let lhs_c = f.map(|k, c| if lam_s[k] > 0.0 { lam_s[k].powf(sigma) * c } else { 0.0 });
    let g = target.analyze(|x| map.m(x) * source.synthesize_at(f, &map.h(x)).unwrap_or(0.0));
    let lam_t = target.eigenvalues();
    let rhs_c = g.map(|k, c| {
        let l = lam_t[k] - map.eigenvalue_shift;
        if l > 1e-12 {
            l.powf(sigma) * c
        } else {
            0.0
        }
    });
    let pts = source.quadrature_points();
    let wts = source.quadrature_weights();
    let (mut num, mut den) = (0.0, 0.0);
    for (xb, w) in pts.iter().zip(wts) {
        let lhs = source.synthesize_at(&lhs_c, xb)?;
        let rhs = map.inverse(|x| target.synthesize_at(&rhs_c, x), xb)?;
        num += w * (lhs - rhs).powi(2);
        den += w * lhs * lhs;
    }
    let discrepancy = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    let tolerance = if map.is_continuous() { 1e-4 } else { 1e-6 };
    Ok(IntertwiningReport {
        pair: map.pair.id().to_string(),
        sigma,
        discrepancy,
        tolerance,
        pass: discrepancy <= tolerance,
    })
}

/// Seeded random test functions in the source span: finite mode combinations for discrete
/// pairs, sums of Gaussians `e^{−b x²}` (analysed in the source) for the Bessel pair.
pub fn random_test_functions(map: &TransferenceMap, source: &SpectralSystem, count: usize, seed: u64) -> Vec<Coefficients> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            if map.is_continuous() {
                let terms: Vec<(f64, f64)> = (0..3)
                    .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0)))
                    .collect();
                source.analyze(|x| terms.iter().map(|(a, b)| a * (-b * x[0] * x[0]).exp()).sum())
            } else {
                let active = source.len().min(20);
                Coefficients::from_values(
                    (0..source.len())
                        .map(|k| if k < active { rng.random_range(-1.0..1.0) } else { 0.0 })
                        .collect(),
                )
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioTransport {
    /// `sup/inf` of `f̄` on `K̄`.
    pub source_ratio: f64,
    /// `sup/inf` of `M·(f̄∘h)` on `K = h^{−1}(K̄)`.
    pub target_ratio: f64,
    /// `sup_K M / inf_K M`.
    pub m_ratio: f64,
    /// Both `target ≤ m_ratio·source` and `source ≤ m_ratio·target`.
    pub first_power: bool,
    /// The same with `m_ratio²`.
    pub squared: bool,
}

/// Harnack ratios of a nonnegative source function before and after transference.
pub fn ratio_transport(map: &TransferenceMap, f: impl Fn(&[f64]) -> f64, k_bar: &[Vec<f64>]) -> Result<RatioTransport> {
    let mut s = (f64::INFINITY, f64::NEG_INFINITY);
    let mut t = s;
    let mut m = s;
    for xb in k_bar {
        let v = f(xb);
        let x = map.h_inv(xb);
        let mv = map.m(&x);
        let g = mv * f(&map.h(&x));
        if !(v > 0.0) || !(g > 0.0) {
            return Err(invalid("ratio transport needs a positive function on K̄"));
        }
        s = (s.0.min(v), s.1.max(v));
        t = (t.0.min(g), t.1.max(g));
        m = (m.0.min(mv), m.1.max(mv));
    }
    let (rs, rt, rm) = (s.1 / s.0, t.1 / t.0, m.1 / m.0);
    let slack = 1.0 + 1e-12;
    Ok(RatioTransport {
        source_ratio: rs,
        target_ratio: rt,
        m_ratio: rm,
        first_power: rt <= rm * rs * slack && rs <= rm * rt * slack,
        squared: rt <= rm * rm * rs * slack && rs <= rm * rm * rt * slack,
    })
}

/// Gram defects of the two composition orders of a rotation with the diagonal Hermite
/// multiplication, `M_D(x)·f(Aᵗx)` and `M_D(Aᵗx)·f(Aᵗx)`, applied to the rotated OU basis.
pub fn rotation_composition_defects(d: [f64; 2], angle: f64, n: usize) -> Result<(f64, f64)> {
    let a = rotation_matrix(angle);
    let source = make_system(
        SystemKind::OrnsteinUhlenbeck {
            d: d.to_vec(),
            rotation: Some(a.clone()),
        },
        Truncation::modes(n),
    )?;
    let target = make_system(SystemKind::HermiteShifted { d: d.to_vec() }, Truncation {
        quad_nodes: Some(4 * n + 40),
        ..Truncation::modes(n)
    })?;
    let md = |x: &[f64]| -> f64 {
        d.iter()
            .zip(x)
            .map(|(&di, &xi)| (di / PI).powf(0.25) * (-0.5 * di * xi * xi).exp())
            .product()
    };
    let at = |x: &[f64]| vec![a[0][0] * x[0] + a[1][0] * x[1], a[0][1] * x[0] + a[1][1] * x[1]];
    let take = n.min(6);
    let idx: Vec<usize> = (0..take).flat_map(|i| (0..take - i).map(move |j| i * n + j)).collect();
    let mut worst = (0.0f64, 0.0f64);
    let pts = target.quadrature_points();
    let wts = target.quadrature_weights();
    let rows = pts
        .iter()
        .map(|x| {
            let y = at(x);
            let vals = source.eval_modes(&y)?;
            Ok((
                idx.iter().map(|&k| md(x) * vals[k]).collect::<Vec<f64>>(),
                idx.iter().map(|&k| md(&y) * vals[k]).collect::<Vec<f64>>(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    for p in 0..idx.len() {
        for q in 0..=p {
            let expect = if p == q { 1.0 } else { 0.0 };
            let g1: f64 = rows.iter().zip(wts).map(|(r, w)| w * r.0[p] * r.0[q]).sum();
            let g2: f64 = rows.iter().zip(wts).map(|(r, w)| w * r.1[p] * r.1[q]).sum();
            worst = (worst.0.max((g1 - expect).abs()), worst.1.max((g2 - expect).abs()));
        }
    }
    Ok(worst)
}
