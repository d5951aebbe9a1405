//! Harnack experiments: manufactured nonnegative σ-harmonic functions, sup/inf ratios,
//! seeded surveys, and a Liouville-type sweep on growing intervals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::extension::{extend, solve_degenerate_fd, DegenerateGrid, SolverOptions};
use crate::fracops::{check_sigma, frac_power_spectral, neg_frac_power, ZeroModePolicy};
use crate::spectra::{make_system, Coefficients, Field, SpectralSystem, SystemKind, Truncation};
use crate::transfer::{ratio_transport, TransferenceMap};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }

    /// `n ≥ 2` equispaced points including both ends.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n).map(|i| self.lo + self.len() * i as f64 / (n - 1) as f64).collect()
    }

    fn inside(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }
}

/// `height·B((x − center)/width)`, `B(t) = (1 − t²)⁴₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.width;
        if t.abs() >= 1.0 {
            0.0
        } else {
            self.height * (1.0 - t * t).powi(4)
        }
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.center - self.width, self.center + self.width)
    }
}

/// Tolerances of the σ-harmonic construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarmonicTolerances {
    /// `sup_O |L^σ f| ≤ on_region·‖g‖_∞`.
    pub on_region: f64,
    /// `f ≥ −nonnegativity·‖f‖_∞` on the Ω grid.
    pub nonnegativity: f64,
}

impl Default for HarmonicTolerances {
    fn default() -> Self {
        HarmonicTolerances {
            on_region: 1e-4,
            nonnegativity: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaHarmonic {
    #[serde(skip)]
    pub coefficients: Coefficients,
    /// `sup_O |L^σ f| / ‖g‖_∞`.
    pub region_defect: f64,
    /// `‖g‖² − Σ|c_k|²` of the generator's analysis.
    pub parseval_defect: f64,
    /// `min_Ω f / ‖f‖_∞` on the test grid.
    pub relative_min: f64,
}

/// `f = L^{−σ} g` for a nonnegative generator vanishing on `O`, with the checks that make
/// `f` an admissible Harnack trial: `L^σ f ≈ 0` on `O` and `f ≥ 0` on the Ω grid.
pub fn make_sigma_harmonic(
    system: &SpectralSystem,
    sigma: f64,
    region: Interval,
    omega_grid: &[f64],
    g: impl Fn(f64) -> f64 + Sync,
    tol: HarmonicTolerances,
) -> Result<SigmaHarmonic> {
    check_sigma(sigma)?;
    if system.dim() != 1 {
        return Err(invalid("Harnack experiments run on one-dimensional systems"));
    }
    if !system.positivity_preserving() {
        return Err(invalid("system is not flagged positivity-preserving"));
    }
    let region_grid = region.grid(omega_grid.len().max(64));
    if region_grid.iter().any(|&x| g(x) != 0.0) {
        return Err(invalid("generator support meets the region O"));
    }
    let g_sup = omega_grid.iter().fold(0.0f64, |m, &x| {
        let v = g(x);
        if v < 0.0 {
            f64::NAN
        } else {
            m.max(v)
        }
    });
    if g_sup.is_nan() {
        return Err(invalid("generator must be nonnegative"));
    }
    let gc = system.analyze(|x| g(x[0]));
    let f = neg_frac_power(system, &gc, sigma, ZeroModePolicy::Error)?;
    let lf = frac_power_spectral(system, &f, sigma)?;
    let pts = |xs: &[f64]| xs.iter().map(|&x| vec![x]).collect::<Vec<_>>();
    let on_o = system.synthesize(&lf, &pts(&region_grid))?;
    let region_defect = if g_sup > 0.0 {
        on_o.iter().fold(0.0f64, |m, v| m.max(v.abs())) / g_sup
    } else {
        0.0
    };
    let values = system.synthesize(&f, &pts(omega_grid))?;
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let relative_min = if sup > 0.0 { min / sup } else { 0.0 };
    if region_defect > tol.on_region {
        return Err(Error::Tolerance {
            what: "L^σ f on the region O".into(),
            measured: region_defect,
            allowed: tol.on_region,
        });
    }
    if relative_min < -tol.nonnegativity {
        return Err(Error::Tolerance {
            what: format!(
                "nonnegativity of f (truncation artifact, Parseval defect {:.3e})",
                gc.parseval_defect
            ),
            measured: -relative_min,
            allowed: tol.nonnegativity,
        });
    }
    Ok(SigmaHarmonic {
        coefficients: f,
        region_defect,
        parseval_defect: gc.parseval_defect,
        relative_min,
    })
}

/// `max_K f / min_K f` over synthesized values at the points of `K`.
pub fn harnack_ratio(system: &SpectralSystem, f: &Coefficients, k: &[f64]) -> Result<f64> {
    let values = system.synthesize(f, &k.iter().map(|&x| vec![x]).collect::<Vec<_>>())?;
    ratio_of(&values)
}

pub fn ratio_of(values: &[f64]) -> Result<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min < 0.0 {
        return Err(invalid(format!("function is negative on K (min {min:.3e})")));
    }
    if !(min > 1e-14) {
        return Err(Error::Domain(format!("unbounded ratio: min over K is {min:.3e}")));
    }
    Ok(max / min)
}

/// Largest difference quotient of synthesized `f` between adjacent points of an `n`-point grid of `K`.
pub fn lipschitz_estimate(system: &SpectralSystem, f: &Coefficients, k: Interval, n: usize) -> Result<f64> {
    let xs = k.grid(n);
    let v = system.synthesize(f, &xs.iter().map(|&x| vec![x]).collect::<Vec<_>>())?;
    Ok(xs
        .windows(2)
        .zip(v.windows(2))
        .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
        .fold(0.0, f64::max))
}

/// A seeded Harnack survey on a one-dimensional system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnackExperiment {
    pub system: SystemKind,
    pub truncation: Truncation,
    pub sigma: f64,
    /// The solve region `O`.
    pub region: Interval,
    /// The compact set `K ⊂ O`.
    pub compact: Interval,
    /// Window of `Ω` carrying the nonnegativity test grid and the generators.
    pub window: Interval,
    /// Points per test grid (`K`, `O`, window).
    pub grid_points: usize,
    pub trials: usize,
    pub seed: u64,
    /// Generator widths are drawn from `[width_min, width_max]`.
    pub width_min: f64,
    pub width_max: f64,
    /// Trials repeated on the reflected extension through the degenerate solver.
    pub gutierrez_trials: usize,
    pub tolerances: HarmonicTolerances,
}

impl Default for HarnackExperiment {
    fn default() -> Self {
        HarnackExperiment {
            system: SystemKind::DirichletInterval { a: 0.0, b: PI },
            truncation: Truncation {
                quad_nodes: Some(512),
                ..Truncation::modes(64)
            },
            sigma: 0.5,
            region: Interval::new(1.0, 2.0),
            compact: Interval::new(1.25, 1.75),
            window: Interval::new(0.0, PI),
            grid_points: 201,
            trials: 200,
            seed: 2024,
            width_min: 0.2,
            width_max: 0.45,
            gutierrez_trials: 4,
            tolerances: HarmonicTolerances::default(),
        }
    }
}

impl HarnackExperiment {
    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)?;
        if !self.compact.inside(&self.region) {
            return Err(invalid("K must lie strictly inside O"));
        }
        if !(self.region.lo >= self.window.lo && self.region.hi <= self.window.hi) || self.region.is_empty() {
            return Err(invalid("O must lie inside the Ω window"));
        }
        if self.grid_points < 8 {
            return Err(invalid("grid_points must be at least 8"));
        }
        if !(self.width_min > 0.0 && self.width_max >= self.width_min) {
            return Err(invalid("generator widths need 0 < width_min ≤ width_max"));
        }
        if self.gaps().is_empty() {
            return Err(invalid("no room for generators between O and the window ends"));
        }
        Ok(())
    }

    fn cell(&self) -> f64 {
        self.window.len() / (self.grid_points - 1) as f64
    }

    /// Portions of `window ∖ O` (less one cell at every end) long enough for the narrowest bump.
    fn gaps(&self) -> Vec<Interval> {
        let m = self.cell();
        [
            Interval::new(self.window.lo + m, self.region.lo - m),
            Interval::new(self.region.hi + m, self.window.hi - m),
        ]
        .into_iter()
        .filter(|g| g.len() > 2.0 * self.width_min)
        .collect()
    }

    /// The generator of trial `i`, from stream `i` of the seeded generator.
    pub fn generator(&self, i: usize) -> Bump {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let gaps = self.gaps();
        let total: f64 = gaps.iter().map(|g| g.len()).sum();
        let mut pick = rng.random_range(0.0..total);
        let mut gap = gaps[gaps.len() - 1];
        for g in &gaps {
            if pick < g.len() {
                gap = *g;
                break;
            }
            pick -= g.len();
        }
        let width = rng.random_range(self.width_min..=self.width_max.min(0.5 * gap.len()));
        let center = rng.random_range(gap.lo + width..=gap.hi - width);
        let height = rng.random_range(0.5..2.0);
        Bump { center, width, height }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Accepted { ratio: f64, region_defect: f64, relative_min: f64 },
    ExcludedNegative { relative_min: f64 },
    ExcludedDefect { region_defect: f64 },
    ExcludedUnbounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub generator: Bump,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyStatistics {
    pub accepted: usize,
    pub excluded_negative: usize,
    pub excluded_defect: usize,
    pub excluded_unbounded: usize,
    /// `C_emp`, the largest accepted ratio.
    pub c_emp: f64,
    pub quartiles: [f64; 3],
    /// `max |ratio(c·f) − ratio(f)|` over accepted trials and `c ∈ {2^{−3}, 2^5}`.
    pub scale_defect_dyadic: f64,
    /// The same for `c ∈ {π, 10^{−3}}`, relative to the ratio.
    pub scale_defect_general: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stability {
    pub c_emp_modes_doubled: f64,
    pub drift_modes: f64,
    pub c_emp_trials_doubled: f64,
    pub drift_trials: f64,
}

/// One trial repeated on the reflected extension `ũ` over `O × (−Y, Y)` by the degenerate solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GutierrezTrial {
    pub trial: usize,
    /// Ratio of the FD solution over `K × [−Y/4, Y/4]`.
    pub fd_ratio: f64,
    /// Ratio of the spectral extension on the same nodes.
    pub spectral_ratio: f64,
    pub fd_min: f64,
    pub max_abs_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub experiment: HarnackExperiment,
    pub statistics: SurveyStatistics,
    pub stability: Option<Stability>,
    pub gutierrez: Vec<GutierrezTrial>,
    pub trials: Vec<TrialRow>,
}

impl SurveyReport {
    /// Per-trial rows: `trial, center, width, height, status, ratio`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["trial", "center", "width", "height", "status", "ratio"])?;
        for row in &self.trials {
            let (status, ratio) = match &row.outcome {
                TrialOutcome::Accepted { ratio, .. } => ("accepted", format!("{ratio:e}")),
                TrialOutcome::ExcludedNegative { .. } => ("excluded_negative", String::new()),
                TrialOutcome::ExcludedDefect { .. } => ("excluded_defect", String::new()),
                TrialOutcome::ExcludedUnbounded => ("excluded_unbounded", String::new()),
            };
            out.write_record([
                row.trial.to_string(),
                format!("{:e}", row.generator.center),
                format!("{:e}", row.generator.width),
                format!("{:e}", row.generator.height),
                status.to_string(),
                ratio,
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

struct Trial {
    row: TrialRow,
    f: Option<Coefficients>,
}

fn run_trials(exp: &HarnackExperiment, system: &SpectralSystem, count: usize) -> Vec<Trial> {
    let omega = exp.window.grid(exp.grid_points);
    let k = exp.compact.grid(exp.grid_points);
    // strict interior of the window: Dirichlet ends are zeros of every mode
    let interior: Vec<f64> = omega[1..omega.len() - 1].to_vec();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let bump = exp.generator(i);
            let made = make_sigma_harmonic(system, exp.sigma, exp.region, &interior, |x| bump.eval(x), exp.tolerances);
            let (outcome, f) = match made {
                Ok(h) => match harnack_ratio(system, &h.coefficients, &k) {
                    Ok(ratio) => (
                        TrialOutcome::Accepted {
                            ratio,
                            region_defect: h.region_defect,
                            relative_min: h.relative_min,
                        },
                        Some(h.coefficients),
                    ),
                    Err(Error::InvalidParameter(_)) => (
                        TrialOutcome::ExcludedNegative {
                            relative_min: h.relative_min,
                        },
                        None,
                    ),
                    Err(_) => (TrialOutcome::ExcludedUnbounded, None),
                },
                Err(Error::Tolerance { what, measured, .. }) if what.starts_with("nonnegativity") => (
                    TrialOutcome::ExcludedNegative {
                        relative_min: -measured,
                    },
                    None,
                ),
                Err(Error::Tolerance { measured, .. }) => (
                    TrialOutcome::ExcludedDefect {
                        region_defect: measured,
                    },
                    None,
                ),
                Err(_) => (TrialOutcome::ExcludedUnbounded, None),
            };
            Trial {
                row: TrialRow {
                    trial: i,
                    generator: bump,
                    outcome,
                },
                f,
            }
        })
        .collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn statistics(system: &SpectralSystem, trials: &[Trial], k: &[f64]) -> Result<SurveyStatistics> {
    let mut ratios = Vec::new();
    let mut counts = [0usize; 3];
    let (mut dyadic, mut general) = (0.0f64, 0.0f64);
    for t in trials {
        match &t.row.outcome {
            TrialOutcome::Accepted { ratio, .. } => {
                ratios.push(*ratio);
                let f = t.f.as_ref().expect("accepted trials keep f");
                for c in [0.125, 32.0] {
                    let r = harnack_ratio(system, &f.map(|_, v| c * v), k)?;
                    dyadic = dyadic.max((r - ratio).abs());
                }
                for c in [PI, 1e-3] {
                    let r = harnack_ratio(system, &f.map(|_, v| c * v), k)?;
                    general = general.max((r - ratio).abs() / ratio);
                }
            }
            TrialOutcome::ExcludedNegative { .. } => counts[0] += 1,
            TrialOutcome::ExcludedDefect { .. } => counts[1] += 1,
            TrialOutcome::ExcludedUnbounded => counts[2] += 1,
        }
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(SurveyStatistics {
        accepted: ratios.len(),
        excluded_negative: counts[0],
        excluded_defect: counts[1],
        excluded_unbounded: counts[2],
        c_emp: sorted.last().copied().unwrap_or(f64::NAN),
        quartiles: [quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75)],
        scale_defect_dyadic: dyadic,
        scale_defect_general: general,
    })
}

fn c_emp(trials: &[Trial]) -> f64 {
    trials
        .iter()
        .filter_map(|t| match t.row.outcome {
            TrialOutcome::Accepted { ratio, .. } => Some(ratio),
            _ => None,
        })
        .fold(f64::NAN, f64::max)
}

/// Trials, statistics, stability under doubled modes and doubled trial count, and the
/// degenerate-solver repeat of the first `gutierrez_trials` accepted trials.
pub fn run_survey(exp: &HarnackExperiment) -> Result<SurveyReport> {
    exp.validate()?;
    let system = make_system(exp.system.clone(), exp.truncation.clone())?;
    let k = exp.compact.grid(exp.grid_points);
    let trials = run_trials(exp, &system, exp.trials);
    let statistics = statistics(&system, &trials, &k)?;

    let stability = if exp.system.id() == "divergence_form_fd" {
        None
    } else {
        let doubled = Truncation {
            modes: 2 * exp.truncation.modes,
            quad_nodes: exp.truncation.quad_nodes.map(|q| 2 * q),
            ..exp.truncation.clone()
        };
        let fine = make_system(exp.system.clone(), doubled)?;
        let c_modes = c_emp(&run_trials(exp, &fine, exp.trials));
        let c_trials = c_emp(&run_trials(exp, &system, 2 * exp.trials));
        let c = statistics.c_emp;
        Some(Stability {
            c_emp_modes_doubled: c_modes,
            drift_modes: (c_modes - c).abs() / c,
            c_emp_trials_doubled: c_trials,
            drift_trials: (c_trials - c).abs() / c,
        })
    };

    let gutierrez = trials
        .iter()
        .filter(|t| t.f.is_some())
        .take(exp.gutierrez_trials)
        .map(|t| gutierrez_trial(exp, &system, t.row.trial, t.f.as_ref().unwrap()))
        .collect::<Result<Vec<_>>>()?;

    Ok(SurveyReport {
        experiment: exp.clone(),
        statistics,
        stability,
        gutierrez,
        trials: trials.into_iter().map(|t| t.row).collect(),
    })
}

/// Solves the degenerate equation on `O × (−Y, Y)`, `Y = |O|`, with the reflected extension
/// of `f` as Dirichlet data, and compares Harnack ratios near `K × {0}`.
pub fn gutierrez_trial(exp: &HarnackExperiment, system: &SpectralSystem, trial: usize, f: &Coefficients) -> Result<GutierrezTrial> {
    match system.kind() {
        SystemKind::DirichletInterval { .. } => {}
        other => return Err(invalid(format!("degenerate repeat is coded for the Dirichlet interval, not {}", other.id()))),
    }
    let field = extend(system, f, exp.sigma)?;
    let y_max = exp.region.len();
    let grid = DegenerateGrid {
        x_lower: exp.region.lo,
        x_upper: exp.region.hi,
        nx: 79,
        y_max,
        ny: 40,
        symmetric: true,
        sigma: exp.sigma,
        b: Field::Constant(1.0),
        v: Field::Constant(0.0),
    };
    let sol = solve_degenerate_fd(
        &grid,
        |x, y| field.reflected_value(&[x], y).unwrap_or(f64::NAN),
        SolverOptions::default(),
    )?;
    let mut fd = Vec::new();
    let mut sp = Vec::new();
    for (i, &x) in sol.xs.iter().enumerate() {
        if x < exp.compact.lo || x > exp.compact.hi {
            continue;
        }
        for (j, &y) in sol.ys.iter().enumerate() {
            if y.abs() <= 0.25 * y_max {
                fd.push(sol.at_node(i, j));
                sp.push(field.reflected_value(&[x], y)?);
            }
        }
    }
    let max_abs_difference = fd.iter().zip(&sp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(GutierrezTrial {
        trial,
        fd_ratio: ratio_of(&fd)?,
        spectral_ratio: ratio_of(&sp)?,
        fd_min: sol.interior_min(),
        max_abs_difference,
    })
}

/// Per-trial check of a survey on the source system against its transference image.
#[derive(Debug, Clone, Serialize)]
pub struct TransportConsistency {
    pub pair: String,
    pub checked: usize,
    pub first_power_violations: usize,
    pub squared_violations: usize,
    /// Largest `target_ratio / source_ratio` seen.
    pub worst_ratio_quotient: f64,
}

/// Runs `exp` (whose system must be `map.source`) and compares each accepted trial's ratio
/// with that of `M·(f∘h)` on `h^{−1}(K)`.
pub fn transport_consistency(map: &TransferenceMap, exp: &HarnackExperiment) -> Result<TransportConsistency> {
    exp.validate()?;
    if exp.system != map.source || map.dim != 1 {
        return Err(invalid("survey system must be the one-dimensional source of the pair"));
    }
    let system = make_system(exp.system.clone(), exp.truncation.clone())?;
    let k: Vec<Vec<f64>> = exp.compact.grid(exp.grid_points).into_iter().map(|x| vec![x]).collect();
    let trials = run_trials(exp, &system, exp.trials);
    let mut out = TransportConsistency {
        pair: map.pair.id().to_string(),
        checked: 0,
        first_power_violations: 0,
        squared_violations: 0,
        worst_ratio_quotient: 0.0,
    };
    for t in trials.iter().filter_map(|t| t.f.as_ref()) {
        let r = ratio_transport(map, |x| system.synthesize_at(t, x).unwrap_or(f64::NAN), &k)?;
        out.checked += 1;
        out.first_power_violations += usize::from(!r.first_power);
        out.squared_violations += usize::from(!r.squared);
        out.worst_ratio_quotient = out.worst_ratio_quotient.max(r.target_ratio / r.source_ratio);
    }
    Ok(out)
}

/// Admission and oscillation of one Liouville candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleCandidate {
    /// `sup_region |L^σ f| / ‖f‖_∞` met the tolerance and `f ≥ 0` there.
    pub admitted: bool,
    pub defect: f64,
    /// `osc(f)/mean(f)` on the window.
    pub oscillation: f64,
}

/// Precondition (`f ≥ 0`, `L^σ f ≈ 0` on `region`) and window oscillation of a candidate.
pub fn liouville_candidate(
    system: &SpectralSystem,
    sigma: f64,
    f: &Coefficients,
    region: Interval,
    window: Interval,
    tol: f64,
) -> Result<LiouvilleCandidate> {
    let pts = |i: Interval| i.grid(201).into_iter().map(|x| vec![x]).collect::<Vec<_>>();
    let lf = frac_power_spectral(system, f, sigma)?;
    let on_region = system.synthesize(f, &pts(region))?;
    let sup = on_region.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let defect = system
        .synthesize(&lf, &pts(region))?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        / if sup > 0.0 { sup } else { 1.0 };
    let nonneg = on_region.iter().all(|&v| v >= -1e-8 * sup);
    let w = system.synthesize(f, &pts(window))?;
    let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    Ok(LiouvilleCandidate {
        admitted: defect <= tol && nonneg,
        defect,
        oscillation: if mean > 0.0 { (hi - lo) / mean } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LiouvilleRow {
    pub radius: f64,
    pub admitted: usize,
    pub candidates: usize,
    /// Mean window oscillation of admitted candidates.
    pub mean_oscillation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiouvilleReport {
    pub sigma: f64,
    pub seed: u64,
    pub rows: Vec<LiouvilleRow>,
    /// Whether the mean oscillation decreases along the radii.
    pub decreasing: bool,
    pub caveat: &'static str,
}

/// On `(−R, R)` with Dirichlet conditions, candidates `f = L^{−σ}g` with generators placed
/// in the outer quarter of the interval are σ-harmonic on `|x| ≤ R/2`;
/// their oscillation on `[−1, 1]` is tracked as `R` grows.
pub fn liouville_check(sigma: f64, radii: &[f64], candidates: usize, seed: u64) -> Result<LiouvilleReport> {
    check_sigma(sigma)?;
    let mut rows = Vec::new();
    for &r in radii {
        if !(r > 2.0) {
            return Err(invalid("radii must exceed 2"));
        }
        let modes = 480;
        let sys = make_system(
            SystemKind::DirichletInterval { a: -r, b: r },
            Truncation {
                quad_nodes: Some(8 * modes),
                ..Truncation::modes(modes)
            },
        )?;
        let window = Interval::new(-1.0, 1.0);
        let region = Interval::new(-0.5 * r, 0.5 * r);
        let results = (0..candidates)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let width = rng.random_range(0.06..0.1) * r;
                let center = side * rng.random_range(0.75 * r + width..0.95 * r - width);
                let bump = Bump {
                    center,
                    width,
                    height: rng.random_range(0.5..2.0),
                };
                let g = sys.analyze(|x| bump.eval(x[0]));
                let f = neg_frac_power(&sys, &g, sigma, ZeroModePolicy::Error)?;
                liouville_candidate(&sys, sigma, &f, region, window, 1e-4)
            })
            .collect::<Result<Vec<_>>>()?;
        let admitted: Vec<&LiouvilleCandidate> = results.iter().filter(|c| c.admitted).collect();
        rows.push(LiouvilleRow {
            radius: r,
            admitted: admitted.len(),
            candidates,
            mean_oscillation: admitted.iter().map(|c| c.oscillation).sum::<f64>() / admitted.len().max(1) as f64,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].mean_oscillation < w[0].mean_oscillation);
    Ok(LiouvilleReport {
        sigma,
        seed,
        rows,
        decreasing,
        caveat: "bounded intervals only approximate the whole-line statement",
    })
}
