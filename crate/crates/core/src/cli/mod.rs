//! Command-line front end: JSON configs with flag overrides, atomic outputs with provenance,
//! exit codes 0 (success), 2 (configuration), 3 (numerical tolerance).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::extension::{default_trace_grid, extend, reflect, trace_derivative};
use crate::fracops::{
    comparison_principle_suite, frac_power_balakrishnan, frac_power_spectral, maximum_principle_suite,
    touching_generator, FracParams,
};
use crate::harnack::{run_survey, HarnackExperiment};
use crate::spectra::{make_system, Coefficients, Flavor, GridFunction, SpectralSystem, SystemKind, Truncation};
use crate::transfer::{catalog, gram_defect, random_test_functions, verify_intertwining, PairId};

#[derive(Debug, Parser)]
#[command(name = "fracspec", version, about = "Fractional powers of second-order operators by eigen-expansions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Catalog id (e.g. `dirichlet_interval`, alias `dirichlet`) or an inline JSON system.
    #[arg(long)]
    pub system: Option<String>,
    /// Comma-separated σ values in (0, 1).
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    /// Modes per axis.
    #[arg(long)]
    pub modes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV input with columns `x0, …, value[, weight]`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog systems and transference pairs.
    Catalog(Common),
    /// Expansion coefficients of a sampled function.
    Analyze(Common),
    /// `L^σ f` at the input points, with a route-agreement check.
    FracApply(Common),
    /// Samples of the reflected extension `ũ(x, y)`.
    Extend {
        #[command(flatten)]
        common: Common,
        /// Comma-separated `y` values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
    },
    /// Neumann trace of the extension against `L^σ f`.
    Trace(Common),
    /// Intertwining and orthonormal transport for transference pairs.
    TransferCheck {
        #[command(flatten)]
        common: Common,
        /// Pair id or `all`.
        #[arg(long)]
        pair: Option<String>,
    },
    /// Harnack survey.
    Harnack {
        #[command(flatten)]
        common: Common,
        /// Per-trial CSV rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Property suites across the catalog.
    Verify {
        #[command(flatten)]
        common: Common,
        /// `route-agreement`, `trace-identity`, `max-principle`, `transference` or `all`.
        #[arg(long)]
        suite: Option<String>,
    },
}

/// The fully resolved run configuration echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemKind>,
    pub truncation: Truncation,
    pub sigma: Vec<f64>,
    pub seed: u64,
    pub trials: Option<usize>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub y: Vec<f64>,
    pub pair: Option<String>,
    pub suite: Option<String>,
    pub harnack: HarnackExperiment,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: None,
            truncation: Truncation::default(),
            sigma: Vec::new(),
            seed: 2024,
            trials: None,
            input: None,
            output: None,
            csv: None,
            y: Vec::new(),
            pair: None,
            suite: None,
            harnack: HarnackExperiment::default(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn parse_system(s: &str) -> Result<SystemKind> {
    let t = s.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| config_error(format!("system JSON: {e}")));
    }
    let id = match t {
        "dirichlet" => "dirichlet_interval",
        "hermite" => "harmonic_oscillator",
        "ou" => "ornstein_uhlenbeck",
        other => other,
    };
    SystemKind::examples()
        .into_iter()
        .find(|k| k.id() == id)
        .ok_or_else(|| config_error(format!("unknown system '{t}'")))
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = &common.system {
        cfg.system = Some(parse_system(s)?);
    }
    if !common.sigma.is_empty() {
        cfg.sigma = common.sigma.clone();
    }
    if let Some(m) = common.modes {
        cfg.truncation.modes = m;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.input.is_some() {
        cfg.input = common.input.clone();
    }
    if common.output.is_some() {
        cfg.output = common.output.clone();
    }
    if common.trials.is_some() {
        cfg.trials = common.trials;
    }
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    for &s in &cfg.sigma {
        if !(s > 0.0 && s < 1.0) {
            return Err(config_error(format!("sigma = {s} must lie in (0, 1)")));
        }
    }
    if cfg.truncation.modes == 0 || cfg.truncation.modes > 501 {
        return Err(config_error("truncation.modes must lie in [1, 501]"));
    }
    if cfg.trials == Some(0) {
        return Err(config_error("trials must be positive"));
    }
    if cfg.y.iter().any(|v| !v.is_finite()) {
        return Err(config_error("y values must be finite"));
    }
    Ok(())
}

fn sigmas(cfg: &RunConfig, default: &[f64]) -> Vec<f64> {
    if cfg.sigma.is_empty() {
        default.to_vec()
    } else {
        cfg.sigma.clone()
    }
}

fn single_sigma(cfg: &RunConfig) -> Result<f64> {
    match cfg.sigma.as_slice() {
        [] => Ok(0.5),
        [s] => Ok(*s),
        _ => Err(config_error("this command takes a single sigma")),
    }
}

fn system_of(cfg: &RunConfig) -> Result<SpectralSystem> {
    let kind = cfg.system.clone().ok_or_else(|| config_error("no system given (--system or config `system`)"))?;
    make_system(kind, cfg.truncation.clone()).map_err(|e| match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    })
}

fn read_input(cfg: &RunConfig) -> Result<Option<GridFunction>> {
    match &cfg.input {
        None => Ok(None),
        Some(p) => {
            let text = fs::read(p).map_err(|e| config_error(format!("{}: {e}", p.display())))?;
            let has_weights = text.split(|&b| b == b'\n').next().is_some_and(|h| {
                String::from_utf8_lossy(h).split(',').any(|c| c.trim() == "weight")
            });
            let mut g = GridFunction::read_csv(text.as_slice(), Some(1.0))?;
            if !has_weights {
                g.weights = trapezoid_weights(&g.points)?;
            }
            Ok(Some(g))
        }
    }
}

/// Trapezoidal weights over the hull of unweighted 1-D samples.
fn trapezoid_weights(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    if points.iter().any(|p| p.len() != 1) {
        return Err(config_error("multi-dimensional CSV input needs a `weight` column"));
    }
    if points.len() < 2 {
        return Err(config_error("unweighted CSV input needs at least two points"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let x = |i: usize| points[order[i]][0];
    let n = order.len();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let lo = if i == 0 { x(0) } else { 0.5 * (x(i - 1) + x(i)) };
        let hi = if i + 1 == n { x(n - 1) } else { 0.5 * (x(i) + x(i + 1)) };
        w[order[i]] = hi - lo;
    }
    Ok(w)
}

/// Seeded smooth test coefficients: uniform draws damped by `e^{−0.15k}`.
pub fn seeded_smooth(system: &SpectralSystem, seed: u64) -> Coefficients {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Coefficients::from_values(
        (0..system.len())
            .map(|k| rng.random_range(-0.5..0.5) * (-0.15 * k as f64).exp())
            .collect(),
    )
}

fn coefficients_of(system: &SpectralSystem, cfg: &RunConfig) -> Result<Coefficients> {
    match read_input(cfg)? {
        Some(g) => system.analyze_grid(&g),
        None => Ok(seeded_smooth(system, cfg.seed)),
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    quantity: &'static str,
    command: &'static str,
    system: Option<&'a SystemKind>,
    sigma: &'a [f64],
    truncation: &'a Truncation,
    seed: u64,
    config: &'a RunConfig,
    result: T,
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| config_error(format!("output path {} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Output {
    json: Vec<u8>,
    csv: Option<Vec<u8>>,
}

fn envelope<T: Serialize>(
    quantity: &'static str,
    command: &'static str,
    cfg: &RunConfig,
    sigma: &[f64],
    result: T,
) -> Result<Vec<u8>> {
    let env = Envelope {
        quantity,
        command,
        system: cfg.system.as_ref(),
        sigma,
        truncation: &cfg.truncation,
        seed: cfg.seed,
        config: cfg,
        result,
    };
    let mut v = serde_json::to_vec_pretty(&env)?;
    v.push(b'\n');
    Ok(v)
}

fn points_csv(points: &[Vec<f64>], values: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let dim = points.first().map_or(1, |p| p.len());
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for (p, v) in points.iter().zip(values) {
        let mut row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        row.push(format!("{v:?}"));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    suite: &'static str,
    name: String,
    measured: f64,
    allowed: f64,
    pass: bool,
}

fn check(suite: &'static str, name: String, measured: f64, allowed: f64) -> Check {
    Check {
        suite,
        name,
        measured,
        allowed,
        pass: measured <= allowed,
    }
}

fn breaches(checks: &[Check]) -> Option<Error> {
    let bad: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    let worst = bad.iter().max_by(|a, b| (a.measured / a.allowed).total_cmp(&(b.measured / b.allowed)))?;
    Some(Error::Tolerance {
        what: format!("{} check(s) failed, worst {}", bad.len(), worst.name),
        measured: worst.measured,
        allowed: worst.allowed,
    })
}

fn route_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let modes = cfg.truncation.modes;
    let kinds = [
        SystemKind::DirichletInterval {
            a: 0.0,
            b: std::f64::consts::PI,
        },
        SystemKind::HarmonicOscillator { d: vec![1.0] },
        SystemKind::LaguerrePhi { alpha: vec![0.5] },
        SystemKind::UltrasphericalL { lambda: 1.5 },
    ];
    let mut out = Vec::new();
    for kind in kinds {
        let sys = make_system(kind, Truncation::modes(modes))?;
        let f = seeded_smooth(&sys, cfg.seed);
        for sigma in sigmas(cfg, &[0.1, 0.25, 0.5, 0.75, 0.9]) {
            let a = frac_power_spectral(&sys, &f, sigma)?;
            let b = frac_power_balakrishnan(&sys, &f, &FracParams::new(sigma)?)?;
            out.push(check(
                "route-agreement",
                format!("{} σ={sigma}", sys.kind().id()),
                sys.relative_distance(&b, &a),
                1e-6,
            ));
        }
    }
    Ok(out)
}

fn trace_rows(sys: &SpectralSystem, f: &Coefficients, sigmas: &[f64]) -> Result<Vec<serde_json::Value>> {
    sigmas
        .iter()
        .map(|&sigma| {
            let exact = frac_power_spectral(sys, f, sigma)?;
            let field = extend(sys, f, sigma)?;
            let est = trace_derivative(&field, &default_trace_grid(), 1.0)?;
            let raw = field.trace_at(2f64.powi(-12))?;
            Ok(json!({
                "sigma": sigma,
                "relative_error": sys.relative_distance(&est.coefficients, &exact),
                "raw_relative_error_at_2^-12": sys.relative_distance(&raw, &exact),
                "spread": est.spread,
            }))
        })
        .collect()
}

fn trace_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for kind in SystemKind::examples() {
        let sys = make_system(kind, Truncation::modes(24))?;
        if sys.flavor() == Flavor::Continuous {
            continue;
        }
        let f = seeded_smooth(&sys, cfg.seed);
        for row in trace_rows(&sys, &f, &sigmas(cfg, &[0.25, 0.5, 0.75]))? {
            out.push(check(
                "trace-identity",
                format!("{} σ={}", sys.kind().id(), row["sigma"]),
                row["relative_error"].as_f64().unwrap_or(f64::INFINITY),
                1e-3,
            ));
        }
    }
    Ok(out)
}

fn principle_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let trials = cfg.trials.unwrap_or(50);
    let mut out = Vec::new();
    for kind in SystemKind::examples() {
        let full = match &kind {
            SystemKind::DivergenceFormFd(spec) => spec.nodes.iter().product::<usize>(),
            _ => 32,
        };
        let sys = make_system(kind, Truncation::modes(full))?;
        if !sys.positivity_preserving() || touching_generator(&sys).is_err() {
            continue;
        }
        for sigma in sigmas(cfg, &[0.2, 0.5, 0.8]) {
            for (label, report) in [
                ("maximum", maximum_principle_suite(&sys, sigma, trials, cfg.seed, 1e-6)?),
                ("comparison", comparison_principle_suite(&sys, sigma, trials, cfg.seed, 1e-6)?),
            ] {
                out.push(check(
                    "max-principle",
                    format!("{label} {} σ={sigma}", sys.kind().id()),
                    report.violations as f64,
                    0.0,
                ));
            }
        }
    }
    Ok(out)
}

fn pair_truncation(pair: &PairId) -> Truncation {
    match pair {
        PairId::Rotation { .. } => Truncation::modes(24),
        PairId::Bessel { .. } => Truncation::default(),
        _ => Truncation::modes(48),
    }
}

fn transfer_suite(cfg: &RunConfig) -> Result<(Vec<Check>, Vec<serde_json::Value>)> {
    let pairs = match cfg.pair.as_deref() {
        None | Some("all") => PairId::examples(),
        Some(name) => vec![PairId::from_name(name).map_err(|e| config_error(e.to_string()))?],
    };
    let trials = cfg.trials.unwrap_or(10);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for pair in pairs {
        let map = catalog(&pair)?;
        let (src, tgt) = map.systems(&pair_truncation(&pair))?;
        let tests = random_test_functions(&map, &src, trials, cfg.seed);
        for sigma in sigmas(cfg, &[0.25, 0.5, 0.75]) {
            let mut worst = 0.0f64;
            let mut tol = 0.0;
            for f in &tests {
                let r = verify_intertwining(&map, &src, &tgt, sigma, f)?;
                worst = worst.max(r.discrepancy);
                tol = r.tolerance;
            }
            checks.push(check("transference", format!("intertwining {} σ={sigma}", pair.id()), worst, tol));
            rows.push(json!({"pair": pair.id(), "sigma": sigma, "worst_discrepancy": worst, "tolerance": tol}));
        }
        let g = gram_defect(&map, 20)?;
        checks.push(check("transference", format!("gram {}", pair.id()), g, 1e-8));
        rows.push(json!({"pair": pair.id(), "gram_defect": g, "tolerance": 1e-8}));
    }
    Ok((checks, rows))
}

fn dispatch(command: &Command) -> Result<(RunConfig, Output)> {
    match command {
        Command::Catalog(common) => {
            let cfg = resolve(common)?;
            validate(&cfg)?;
            let systems = SystemKind::examples()
                .into_iter()
                .map(|k| Ok(make_system(k, Truncation::modes(8))?.describe()))
                .collect::<Result<Vec<_>>>()?;
            let pairs = PairId::examples()
                .into_iter()
                .map(|p| {
                    let m = catalog(&p)?;
                    Ok(json!({
                        "pair": p,
                        "source": m.source,
                        "target": m.target,
                        "eigenvalue_shift": m.eigenvalue_shift,
                        "source_measure": m.source_measure,
                        "target_measure": m.target_measure,
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            let json = envelope("catalog", "catalog", &cfg, &[], json!({"systems": systems, "pairs": pairs}))?;
            Ok((cfg, Output { json, csv: None }))
        }
        Command::Analyze(common) => {
            let cfg = resolve(common)?;
            validate(&cfg)?;
            let sys = system_of(&cfg)?;
            let g = read_input(&cfg)?.ok_or_else(|| config_error("analyze needs --input"))?;
            let c = sys.analyze_grid(&g)?;
            let result = json!({
                "eigenvalues": sys.eigenvalues(),
                "coefficients": c.values,
                "parseval_defect": c.parseval_defect,
                "input_norm_sq": c.input_norm_sq,
            });
            let json = envelope("expansion_coefficients", "analyze", &cfg, &[], result)?;
            Ok((cfg, Output { json, csv: None }))
        }
        Command::FracApply(common) => {
            let cfg = resolve(common)?;
            validate(&cfg)?;
            let sigma = single_sigma(&cfg)?;
            let sys = system_of(&cfg)?;
            let g = read_input(&cfg)?.ok_or_else(|| config_error("frac-apply needs --input"))?;
            let c = sys.analyze_grid(&g)?;
            let a = frac_power_spectral(&sys, &c, sigma)?;
            let b = frac_power_balakrishnan(&sys, &c, &FracParams::new(sigma)?)?;
            let agreement = sys.relative_distance(&b, &a);
            if agreement > 1e-6 {
                return Err(Error::Tolerance {
                    what: "route agreement of the two fractional-power routes".into(),
                    measured: agreement,
                    allowed: 1e-6,
                });
            }
            let values = sys.synthesize(&a, &g.points)?;
            let result = json!({"route_agreement": agreement, "parseval_defect": c.parseval_defect, "points": g.points.len()});
            let json = envelope("fractional_power", "frac-apply", &cfg, &[sigma], result)?;
            Ok((
                cfg,
                Output {
                    json,
                    csv: Some(points_csv(&g.points, &values)?),
                },
            ))
        }
        Command::Extend { common, y } => {
            let mut cfg = resolve(common)?;
            if !y.is_empty() {
                cfg.y = y.clone();
            }
            if cfg.y.is_empty() {
                cfg.y = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
            }
            validate(&cfg)?;
            let sigma = single_sigma(&cfg)?;
            let sys = system_of(&cfg)?;
            let input = read_input(&cfg)?;
            let f = match &input {
                Some(g) => sys.analyze_grid(g)?,
                None => seeded_smooth(&sys, cfg.seed),
            };
            let xs = match input {
                Some(g) => g.points,
                None => sys.quadrature_points().to_vec(),
            };
            let field = extend(&sys, &f, sigma)?;
            let samples = reflect(&field, &xs, &cfg.y)?;
            let mut buf = Vec::new();
            samples.write_csv(&mut buf)?;
            let result = json!({"points": xs.len(), "y": cfg.y, "c_sigma": field.c_sigma});
            let json = envelope("reflected_extension", "extend", &cfg, &[sigma], result)?;
            Ok((cfg, Output { json, csv: Some(buf) }))
        }
        Command::Trace(common) => {
            let cfg = resolve(common)?;
            validate(&cfg)?;
            let sys = system_of(&cfg)?;
            let f = coefficients_of(&sys, &cfg)?;
            let sig = sigmas(&cfg, &[0.25, 0.5, 0.75]);
            let rows = trace_rows(&sys, &f, &sig)?;
            let checks: Vec<Check> = rows
                .iter()
                .map(|r| {
                    check(
                        "trace-identity",
                        format!("σ={}", r["sigma"]),
                        r["relative_error"].as_f64().unwrap_or(f64::INFINITY),
                        1e-3,
                    )
                })
                .collect();
            let json = envelope("neumann_trace", "trace", &cfg, &sig, json!({"rows": rows, "checks": checks}))?;
            finish(cfg, Output { json, csv: None }, &checks)
        }
        Command::TransferCheck { common, pair } => {
            let mut cfg = resolve(common)?;
            if pair.is_some() {
                cfg.pair = pair.clone();
            }
            validate(&cfg)?;
            let (checks, rows) = transfer_suite(&cfg)?;
            let sig = sigmas(&cfg, &[0.25, 0.5, 0.75]);
            let json = envelope("transference", "transfer-check", &cfg, &sig, json!({"rows": rows, "checks": checks}))?;
            finish(cfg, Output { json, csv: None }, &checks)
        }
        Command::Harnack { common, csv } => {
            let mut cfg = resolve(common)?;
            if csv.is_some() {
                cfg.csv = csv.clone();
            }
            if let Some(kind) = &cfg.system {
                cfg.harnack.system = kind.clone();
            }
            if common.modes.is_some() {
                cfg.harnack.truncation.modes = cfg.truncation.modes;
            }
            match cfg.sigma.as_slice() {
                [] => {}
                [s] => cfg.harnack.sigma = *s,
                _ => return Err(config_error("harnack takes a single sigma")),
            }
            if common.seed.is_some() {
                cfg.harnack.seed = cfg.seed;
            }
            if let Some(t) = cfg.trials {
                cfg.harnack.trials = t;
            }
            validate(&cfg)?;
            cfg.harnack.validate().map_err(|e| config_error(e.to_string()))?;
            let report = run_survey(&cfg.harnack)?;
            let csv_bytes = if cfg.csv.is_some() {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                Some(buf)
            } else {
                None
            };
            let result = json!({
                "statistics": report.statistics,
                "stability": report.stability,
                "gutierrez": report.gutierrez,
            });
            let json = envelope("harnack_survey", "harnack", &cfg, &[cfg.harnack.sigma], result)?;
            Ok((cfg, Output { json, csv: csv_bytes }))
        }
        Command::Verify { common, suite } => {
            let mut cfg = resolve(common)?;
            if suite.is_some() {
                cfg.suite = suite.clone();
            }
            validate(&cfg)?;
            let name = cfg.suite.clone().unwrap_or_else(|| "all".into());
            let mut checks = Vec::new();
            let all = name == "all";
            let known = ["route-agreement", "trace-identity", "max-principle", "transference", "all"];
            if !known.contains(&name.as_str()) {
                return Err(config_error(format!("unknown suite '{name}' (expected one of {known:?})")));
            }
            if all || name == "route-agreement" {
                checks.extend(route_suite(&cfg)?);
            }
            if all || name == "trace-identity" {
                checks.extend(trace_suite(&cfg)?);
            }
            if all || name == "max-principle" {
                checks.extend(principle_suite(&cfg)?);
            }
            if all || name == "transference" {
                checks.extend(transfer_suite(&cfg)?.0);
            }
            let passed = checks.iter().filter(|c| c.pass).count();
            let result = json!({"suite": name, "passed": passed, "total": checks.len(), "checks": checks});
            let json = envelope("property_suite", "verify", &cfg, &cfg.sigma, result)?;
            finish(cfg, Output { json, csv: None }, &checks)
        }
    }
}

/// Emits the report, then reports any breached check as a tolerance failure.
fn finish(cfg: RunConfig, out: Output, checks: &[Check]) -> Result<(RunConfig, Output)> {
    match breaches(checks) {
        None => Ok((cfg, out)),
        Some(err) => {
            emit(&cfg, &out)?;
            Err(err)
        }
    }
}

fn emit(cfg: &RunConfig, out: &Output) -> Result<()> {
    match (&cfg.output, &out.csv) {
        // CSV payload at the output path, provenance JSON beside it
        (Some(path), Some(csv)) if cfg.csv.is_none() => {
            write_atomic(path, csv)?;
            write_atomic(&sidecar(path), &out.json)?;
        }
        (Some(path), _) => write_atomic(path, &out.json)?,
        (None, Some(csv)) if cfg.csv.is_none() => std::io::stdout().write_all(csv)?,
        (None, _) => std::io::stdout().write_all(&out.json)?,
    }
    if let (Some(path), Some(csv)) = (&cfg.csv, &out.csv) {
        write_atomic(path, csv)?;
    }
    Ok(())
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Tolerance { .. } | Error::Convergence(_) | Error::Domain(_) | Error::ZeroMode(_) => 3,
        _ => 2,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Domain(_) => "domain",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::Tolerance { .. } => "tolerance",
        Error::Convergence(_) => "convergence",
        Error::ZeroMode(_) => "zero_mode",
        Error::Unknown(_) => "unknown_identifier",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}

fn report_error(kind: &str, message: &str, code: i32) {
    let body = json!({"error": kind, "message": message, "exit_code": code});
    eprintln!("{body}");
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("FRACSPEC_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(config_error(format!("FRACSPEC_THREADS = '{v}' is not a positive integer"))),
        },
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report_error("config", e.to_string().trim(), 2);
            return 2;
        }
    };
    let outcome = threads().and_then(|n| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = n {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| config_error(e.to_string()))?;
        pool.install(|| dispatch(&cli.command).and_then(|(cfg, out)| emit(&cfg, &out)))
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            report_error(error_kind(&e), &e.to_string(), code);
            code
        }
    }
}
