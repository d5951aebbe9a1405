//! Finite volumes for `div(|y|^{1−2σ} b ∇v) − |y|^{1−2σ} V v = 0` on `(a, b) × (−Y, Y)`
//! or `(a, b) × (0, Y)` with Dirichlet data on the whole boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fracops::check_sigma;
use crate::spectra::{fmt_f64, Field};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateGrid {
    pub x_lower: f64,
    pub x_upper: f64,
    /// Interior nodes in `x`.
    pub nx: usize,
    pub y_max: f64,
    /// Intervals per half in `y`.
    pub ny: usize,
    /// `(−Y, Y)` when true (with `y = 0` an interior line), else `(0, Y)`.
    pub symmetric: bool,
    pub sigma: f64,
    /// `b(x)` on the `nx + 2` x-nodes.
    #[serde(default = "unit_field")]
    pub b: Field,
    #[serde(default = "zero_field")]
    pub v: Field,
}

fn unit_field() -> Field {
    Field::Constant(1.0)
}

fn zero_field() -> Field {
    Field::Constant(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative residual target of the conjugate-gradient iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 50_000,
        }
    }
}

impl DegenerateGrid {
    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)?;
        if !(self.x_lower < self.x_upper) || !(self.y_max > 0.0) {
            return Err(invalid("degenerate grid needs x_lower < x_upper and y_max > 0"));
        }
        if self.nx < 1 || self.ny < 2 {
            return Err(invalid("degenerate grid needs nx ≥ 1 and ny ≥ 2"));
        }
        for (name, f) in [("b", &self.b), ("V", &self.v)] {
            if let Field::Samples(s) = f {
                if s.len() != self.nx + 2 {
                    return Err(invalid(format!("{name} needs {} samples", self.nx + 2)));
                }
            }
        }
        for i in 0..self.nx + 2 {
            if !(self.b.at(i) > 0.0) {
                return Err(invalid("b must be positive"));
            }
            if !(self.v.at(i) >= 0.0) {
                return Err(invalid("potential must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        let h = (self.x_upper - self.x_lower) / (self.nx + 1) as f64;
        (0..self.nx + 2).map(|i| self.x_lower + i as f64 * h).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        let h = self.y_max / self.ny as f64;
        if self.symmetric {
            (0..=2 * self.ny).map(|j| -self.y_max + j as f64 * h).collect()
        } else {
            (0..=self.ny).map(|j| j as f64 * h).collect()
        }
    }
}

/// `∫_a^b |y|^p dy`, `p > −1`.
fn power_integral(a: f64, b: f64, p: f64) -> f64 {
    let prim = |y: f64| y.signum() * y.abs().powf(p + 1.0) / (p + 1.0);
    prim(b) - prim(a)
}

struct Assembly {
    nx: usize,
    ny: usize,
    diag: Vec<f64>,
    /// Couplings to the west/east/south/north neighbours (positive numbers).
    west: Vec<f64>,
    east: Vec<f64>,
    south: Vec<f64>,
    north: Vec<f64>,
}

impl Assembly {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let ny = self.ny;
        let nx = self.nx;
        out.par_iter_mut().enumerate().for_each(|(p, o)| {
            let (i, j) = (p / ny, p % ny);
            let mut s = self.diag[p] * v[p];
            if i > 0 {
                s -= self.west[p] * v[p - ny];
            }
            if i + 1 < nx {
                s -= self.east[p] * v[p + ny];
            }
            if j > 0 {
                s -= self.south[p] * v[p - 1];
            }
            if j + 1 < ny {
                s -= self.north[p] * v[p + 1];
            }
            *o = s;
        });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DegenerateSolution {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Full grid, `values[i * ys.len() + j]`, boundary included.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Positive diagonal, nonpositive off-diagonals, weak diagonal dominance.
    pub m_matrix: bool,
}

impl DegenerateSolution {
    pub fn at_node(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }

    pub fn interior_min(&self) -> f64 {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut m = f64::INFINITY;
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                m = m.min(self.at_node(i, j));
            }
        }
        m
    }

    /// Bilinear interpolation.
    pub fn value_at(&self, x: f64, y: f64) -> Result<f64> {
        let locate = |g: &[f64], t: f64| -> Result<(usize, f64)> {
            let (lo, hi) = (g[0], g[g.len() - 1]);
            if !(t >= lo && t <= hi) {
                return Err(crate::error::domain(format!("{t} outside [{lo}, {hi}]")));
            }
            let h = (hi - lo) / (g.len() - 1) as f64;
            let i = (((t - lo) / h).floor() as usize).min(g.len() - 2);
            Ok((i, (t - g[i]) / h))
        };
        let (i, s) = locate(&self.xs, x)?;
        let (j, t) = locate(&self.ys, y)?;
        Ok((1.0 - s) * (1.0 - t) * self.at_node(i, j)
            + s * (1.0 - t) * self.at_node(i + 1, j)
            + (1.0 - s) * t * self.at_node(i, j + 1)
            + s * t * self.at_node(i + 1, j + 1))
    }

    /// CSV with columns `x, y, value`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value"])?;
        for (i, &x) in self.xs.iter().enumerate() {
            for (j, &y) in self.ys.iter().enumerate() {
                w.write_record([fmt_f64(x), fmt_f64(y), fmt_f64(self.at_node(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Node-centred finite volumes. `x`-faces carry `b` (harmonic mean of the nodes) times the
/// exact weight moment of the control row; `y`-faces carry the exact harmonic average
/// `h / ∫|y|^{2σ−1} dy` of the weight, finite across `y = 0` for every `σ ∈ (0, 1)`.
/// The SPD system is solved by Jacobi-preconditioned conjugate gradients.
pub fn solve_degenerate_fd(
    grid: &DegenerateGrid,
    boundary: impl Fn(f64, f64) -> f64 + Sync,
    options: SolverOptions,
) -> Result<DegenerateSolution> {
    grid.validate()?;
    let xs = grid.xs();
    let ys = grid.ys();
    let hx = xs[1] - xs[0];
    let nx = grid.nx;
    let ny = ys.len() - 2;
    let e = 1.0 - 2.0 * grid.sigma;
    let n = nx * ny;
    let moment = |j: usize| {
        let lo = if j == 0 { ys[0] } else { 0.5 * (ys[j - 1] + ys[j]) };
        let hi = if j + 1 == ys.len() { ys[j] } else { 0.5 * (ys[j] + ys[j + 1]) };
        power_integral(lo, hi, e)
    };
    // y-face between full rows j and j+1
    let kappa = |j: usize| 1.0 / power_integral(ys[j], ys[j + 1], -e);
    let bface = |i: usize| {
        let (b0, b1) = (grid.b.at(i), grid.b.at(i + 1));
        2.0 * b0 * b1 / (b0 + b1)
    };
    let mut asm = Assembly {
        nx,
        ny,
        diag: vec![0.0; n],
        west: vec![0.0; n],
        east: vec![0.0; n],
        south: vec![0.0; n],
        north: vec![0.0; n],
    };
    let mut rhs = vec![0.0; n];
    for i in 0..nx {
        let fi = i + 1;
        for j in 0..ny {
            let fj = j + 1;
            let p = i * ny + j;
            let w = moment(fj);
            let west = bface(fi - 1) * w / hx;
            let east = bface(fi) * w / hx;
            let south = hx * kappa(fj - 1);
            let north = hx * kappa(fj);
            asm.diag[p] = west + east + south + north + grid.v.at(fi) * w * hx;
            asm.west[p] = west;
            asm.east[p] = east;
            asm.south[p] = south;
            asm.north[p] = north;
            if i == 0 {
                rhs[p] += west * boundary(xs[0], ys[fj]);
            }
            if i + 1 == nx {
                rhs[p] += east * boundary(xs[nx + 1], ys[fj]);
            }
            if j == 0 {
                rhs[p] += south * boundary(xs[fi], ys[0]);
            }
            if j + 1 == ny {
                rhs[p] += north * boundary(xs[fi], ys[ny + 1]);
            }
        }
    }
    let m_matrix = (0..n).all(|p| {
        let off = asm.west[p] + asm.east[p] + asm.south[p] + asm.north[p];
        asm.diag[p] > 0.0
            && [asm.west[p], asm.east[p], asm.south[p], asm.north[p]].iter().all(|&c| c >= 0.0)
            && asm.diag[p] >= off * (1.0 - 1e-12)
    });
    if !m_matrix {
        return Err(Error::Convergence("degenerate assembly is not an M-matrix".into()));
    }
    // start from the mean boundary value
    let mut bsum = 0.0;
    let mut bcount = 0usize;
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            if i == 0 || j == 0 || i == nx + 1 || j == ny + 1 {
                bsum += boundary(x, y);
                bcount += 1;
            }
        }
    }
    let mut v = vec![bsum / bcount as f64; n];
    let mut r = vec![0.0; n];
    asm.apply(&v, &mut r);
    r.par_iter_mut().zip(&rhs).for_each(|(ri, bi)| *ri = bi - *ri);
    // fixed chunking keeps the reductions bitwise reproducible across thread counts
    let dot = |a: &[f64], b: &[f64]| {
        a.par_chunks(4096)
            .zip(b.par_chunks(4096))
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
    };
    let norm = |a: &[f64]| dot(a, a).sqrt();
    let bnorm = match norm(&rhs) {
        b if b > 0.0 => b,
        _ => 1.0,
    };
    let mut z: Vec<f64> = r.iter().zip(&asm.diag).map(|(a, d)| a / d).collect();
    let mut pdir = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = norm(&r) / bnorm;
    while rel > options.tol {
        if iterations >= options.max_iter {
            return Err(Error::Convergence(format!(
                "conjugate gradients stalled at relative residual {rel:.3e} after {iterations} iterations"
            )));
        }
        asm.apply(&pdir, &mut ap);
        let pap = dot(&pdir, &ap);
        if !(pap > 0.0) {
            return Err(Error::Convergence("indefinite degenerate assembly".into()));
        }
        let alpha = rz / pap;
        v.par_iter_mut().zip(&pdir).for_each(|(vi, pi)| *vi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, a)| *ri -= alpha * a);
        z.par_iter_mut()
            .zip(&r)
            .zip(&asm.diag)
            .for_each(|((zi, ri), d)| *zi = ri / d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        pdir.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        iterations += 1;
        rel = norm(&r) / bnorm;
    }
    let full_ny = ny + 2;
    let mut values = vec![0.0; (nx + 2) * full_ny];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            values[i * full_ny + j] = if i == 0 || j == 0 || i == nx + 1 || j == ny + 1 {
                boundary(x, y)
            } else {
                v[(i - 1) * ny + (j - 1)]
            };
        }
    }
    Ok(DegenerateSolution {
        xs,
        ys,
        values,
        iterations,
        relative_residual: rel,
        m_matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_integral_is_symmetric() {
        let p = -0.4;
        let whole = power_integral(-1.0, 1.0, p);
        assert!((whole - 2.0 * power_integral(0.0, 1.0, p)).abs() < 1e-15);
        assert!((power_integral(0.0, 1.0, p) - 1.0 / 0.6).abs() < 1e-15);
    }
}
