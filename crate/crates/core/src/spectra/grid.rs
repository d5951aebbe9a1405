use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Samples of a function together with quadrature weights for the measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GridFunction {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let g = GridFunction {
            points,
            values,
            weights,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if self.values.len() != n || self.weights.len() != n {
            return Err(invalid(format!(
                "grid function has {n} points, {} values, {} weights",
                self.values.len(),
                self.weights.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0)) {
            return Err(invalid(format!("quadrature weight {w} is not positive")));
        }
        if let Some(p) = self.points.first() {
            if self.points.iter().any(|q| q.len() != p.len()) {
                return Err(invalid("grid points have inconsistent dimension"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total measure of the sampled region.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| w * v * v).sum()
    }

    pub fn inner(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).zip(&self.weights).map(|((a, b), w)| w * a * b).sum()
    }

    pub fn with_values(&self, values: Vec<f64>) -> GridFunction {
        GridFunction {
            points: self.points.clone(),
            values,
            weights: self.weights.clone(),
        }
    }

    /// Writes columns `x0, …, x{n−1}, value, weight`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dim()).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        header.push("weight".into());
        w.write_record(&header)?;
        for ((p, v), wt) in self.points.iter().zip(&self.values).zip(&self.weights) {
            let mut row: Vec<String> = p.iter().map(|x| fmt(*x)).collect();
            row.push(fmt(*v));
            row.push(fmt(*wt));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`GridFunction::write_csv`]. The `weight`
    /// column may be absent, in which case `default_weight` is used for every row.
    pub fn read_csv<R: Read>(input: R, default_weight: Option<f64>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let value_col = headers
            .iter()
            .position(|h| h == "value")
            .ok_or_else(|| Error::Config("CSV input lacks a `value` column".into()))?;
        let weight_col = headers.iter().position(|h| h == "weight");
        let coord_cols: Vec<usize> = (0..headers.len())
            .filter(|&i| i != value_col && Some(i) != weight_col)
            .collect();
        let (mut points, mut values, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number `{}`: {e}", &rec[i])))
            };
            points.push(coord_cols.iter().map(|&i| num(i)).collect::<Result<Vec<_>>>()?);
            values.push(num(value_col)?);
            weights.push(match (weight_col, default_weight) {
                (Some(i), _) => num(i)?,
                (None, Some(w)) => w,
                (None, None) => {
                    return Err(Error::Config("CSV input lacks a `weight` column".into()))
                }
            });
        }
        GridFunction::new(points, values, weights)
    }
}

/// Shortest round-trip decimal representation.
pub(crate) fn fmt(x: f64) -> String {
    format!("{x:?}")
}
