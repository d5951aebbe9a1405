//! Finite-difference realization of `−div(a∇) + V` with Dirichlet boundary rows.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A coefficient field: constant, or samples on the full node grid (boundary included,
/// row-major with the last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Constant(f64),
    Samples(Vec<f64>),
}

impl Field {
    pub fn at(&self, idx: usize) -> f64 {
        match self {
            Field::Constant(c) => *c,
            Field::Samples(v) => v[idx],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Interior nodes per axis.
    pub nodes: Vec<usize>,
    pub a: Field,
    #[serde(default = "zero_field")]
    pub v: Field,
    /// Ellipticity constant: `μ^{−1} ≤ a ≤ μ`.
    #[serde(default = "default_mu")]
    pub mu: f64,
}

fn zero_field() -> Field {
    Field::Constant(0.0)
}

fn default_mu() -> f64 {
    10.0
}

impl FdSpec {
    pub fn uniform(lower: f64, upper: f64, nodes: usize) -> Self {
        FdSpec {
            lower: vec![lower],
            upper: vec![upper],
            nodes: vec![nodes],
            a: Field::Constant(1.0),
            v: Field::Constant(0.0),
            mu: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (self.upper[i] - self.lower[i]) / (self.nodes[i] + 1) as f64)
            .collect()
    }

    fn full_shape(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n + 2).collect()
    }

    /// Coordinates of the full node grid (boundary included), in storage order.
    pub fn full_points(&self) -> Vec<Vec<f64>> {
        let h = self.spacing();
        let shape = self.full_shape();
        let total: usize = shape.iter().product();
        (0..total)
            .map(|flat| {
                unflatten(flat, &shape)
                    .iter()
                    .enumerate()
                    .map(|(ax, &i)| self.lower[ax] + i as f64 * h[ax])
                    .collect()
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(1..=2).contains(&n) || self.lower.len() != n || self.upper.len() != n {
            return Err(invalid("grid operators support dimensions 1 and 2 with matching bounds"));
        }
        if self.nodes.iter().any(|&k| k < 2) {
            return Err(invalid("each axis needs at least two interior nodes"));
        }
        if (0..n).any(|i| !(self.upper[i] > self.lower[i])) {
            return Err(invalid("grid bounds must satisfy lower < upper"));
        }
        if !(self.mu >= 1.0) {
            return Err(invalid(format!("ellipticity constant μ = {} must be ≥ 1", self.mu)));
        }
        let total: usize = self.full_shape().iter().product();
        for (name, f) in [("a", &self.a), ("V", &self.v)] {
            if let Field::Samples(s) = f {
                if s.len() != total {
                    return Err(invalid(format!(
                        "{name} has {} samples, grid has {total} nodes",
                        s.len()
                    )));
                }
            }
        }
        for idx in 0..total {
            let a = self.a.at(idx);
            if !(a >= 1.0 / self.mu && a <= self.mu) {
                return Err(invalid(format!(
                    "ellipticity violated: a = {a} outside [1/μ, μ] with μ = {}",
                    self.mu
                )));
            }
            let v = self.v.at(idx);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!(
                    "potential V = {v} rejected: the potential must be nonnegative"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for ax in (0..shape.len()).rev() {
        idx[ax] = flat % shape[ax];
        flat /= shape[ax];
    }
    idx
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &s)| acc * s + i)
}

#[derive(Debug, Clone)]
pub(crate) struct FdOperator {
    pub spec: FdSpec,
    pub h: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors normalized so that `Σ cell · v_i² = 1`.
    pub vectors: DMatrix<f64>,
    pub points: Vec<Vec<f64>>,
    pub cell: f64,
}

impl FdOperator {
    pub fn new(spec: FdSpec, keep: usize) -> Result<Self> {
        spec.validate()?;
        let h = spec.spacing();
        let full = spec.full_shape();
        let interior = spec.nodes.clone();
        let n: usize = interior.iter().product();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for row in 0..n {
            let idx = unflatten(row, &interior);
            let full_idx: Vec<usize> = idx.iter().map(|i| i + 1).collect();
            let here = flatten(&full_idx, &full);
            let a_here = spec.a.at(here);
            m[(row, row)] += spec.v.at(here);
            for ax in 0..spec.dim() {
                for step in [-1i64, 1] {
                    let mut nb = full_idx.clone();
                    nb[ax] = (nb[ax] as i64 + step) as usize;
                    let a_nb = spec.a.at(flatten(&nb, &full));
                    let face = 2.0 * a_here * a_nb / (a_here + a_nb) / (h[ax] * h[ax]);
                    m[(row, row)] += face;
                    let on_boundary = nb[ax] == 0 || nb[ax] == full[ax] - 1;
                    if !on_boundary {
                        let nb_int: Vec<usize> = nb.iter().map(|i| i - 1).collect();
                        m[(row, flatten(&nb_int, &interior))] -= face;
                    }
                }
            }
        }
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let keep = keep.min(n);
        let cell: f64 = h.iter().product();
        let mut vectors = DMatrix::<f64>::zeros(n, keep);
        let mut eigenvalues = Vec::with_capacity(keep);
        for (c, &j) in order.iter().take(keep).enumerate() {
            let col = eig.eigenvectors.column(j);
            // fix the sign so the first significant entry is positive
            let pivot = col.iter().copied().find(|v| v.abs() > 1e-8).unwrap_or(1.0);
            let s = pivot.signum() / cell.sqrt();
            for r in 0..n {
                vectors[(r, c)] = s * col[r];
            }
            eigenvalues.push(eig.eigenvalues[j].max(0.0));
        }
        let points = (0..n)
            .map(|row| {
                unflatten(row, &interior)
                    .iter()
                    .enumerate()
                    .map(|(ax, &i)| spec.lower[ax] + (i + 1) as f64 * h[ax])
                    .collect()
            })
            .collect();
        Ok(FdOperator {
            spec,
            h,
            matrix: m,
            eigenvalues,
            vectors,
            points,
            cell,
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(ax, &v)| v > self.spec.lower[ax] && v < self.spec.upper[ax])
    }

    /// Multilinear interpolation weights of `x` onto interior nodes (boundary nodes carry zero).
    pub fn stencil(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let interior = &self.spec.nodes;
        let dim = interior.len();
        let mut base = vec![0usize; dim];
        let mut frac = vec![0.0; dim];
        for ax in 0..dim {
            let t = (x[ax] - self.spec.lower[ax]) / self.h[ax];
            let i = (t.floor() as usize).min(interior[ax]);
            base[ax] = i;
            frac[ax] = t - i as f64;
        }
        let mut out = Vec::new();
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut idx = vec![0usize; dim];
            let mut inside = true;
            for ax in 0..dim {
                let up = corner >> ax & 1 == 1;
                let full_i = base[ax] + up as usize;
                w *= if up { frac[ax] } else { 1.0 - frac[ax] };
                if full_i == 0 || full_i > interior[ax] {
                    inside = false;
                } else {
                    idx[ax] = full_i - 1;
                }
            }
            if inside && w != 0.0 {
                out.push((flatten(&idx, interior), w));
            }
        }
        out
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        let st = self.stencil(x);
        (0..self.vectors.ncols())
            .map(|c| st.iter().map(|&(r, w)| w * self.vectors[(r, c)]).sum())
            .collect()
    }
}
