//! Probability vectors, channels and the information measures built on them.
//!
//! Everything is in nats and `0 ln 0` is taken as 0. The public divergence
//! functions reject arguments with mismatched supports; the crate-internal
//! slice versions return `+inf` instead.

mod measures;
mod source;
mod types;

pub use measures::*;
pub use source::Source;
pub use types::*;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on the total mass of user supplied distributions.
pub const PMF_TOL: f64 = 1e-12;

fn check_probs(probs: &[f64]) -> std::result::Result<(), String> {
    if probs.len() < 2 {
        return Err(format!("alphabet size {} is below 2", probs.len()));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("entry {i} is {p}"));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PMF_TOL {
        return Err(format!("entries sum to {total}"));
    }
    Ok(())
}

/// A probability mass function on `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs).map_err(Error::InvalidPmf)?;
        Ok(Self(probs))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut p = vec![0.0; k];
        p[at] = 1.0;
        Self(p)
    }

    /// Normalizes nonnegative weights. Returns `None` when they sum to zero.
    pub fn from_weights(mut w: Vec<f64>) -> Option<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= total);
        Some(Self(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&p| p > 0.0)
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A row stochastic matrix `Q(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondPmf {
    rows: Vec<Vec<f64>>,
}

impl CondPmf {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(Error::InvalidPmf("empty conditional distribution".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidPmf(format!(
                    "row {x} has {} entries, expected {width}",
                    row.len()
                )));
            }
            check_probs(row).map_err(|e| Error::InvalidPmf(format!("row {x}: {e}")))?;
        }
        Ok(Self { rows })
    }

    /// Every row equal to `p`.
    pub fn constant_rows(n_rows: usize, p: &Pmf) -> Self {
        Self {
            rows: vec![p.as_slice().to_vec(); n_rows],
        }
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn in_size(&self) -> usize {
        self.rows.len()
    }

    pub fn out_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// Output marginal `sum_x q(x) Q(.|x)`.
    pub fn output_marginal(&self, qx: &Pmf) -> Pmf {
        Pmf(output_marginal_raw(qx.as_slice(), &self.rows))
    }

    pub fn joint(&self, qx: &Pmf) -> JointPmf {
        let rows = self
            .rows
            .iter()
            .zip(qx.as_slice())
            .map(|(row, &q)| row.iter().map(|&v| q * v).collect())
            .collect();
        JointPmf { rows }
    }
}

pub(crate) fn output_marginal_raw(qx: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for (row, &q) in rows.iter().zip(qx) {
        if q > 0.0 {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += q * v;
            }
        }
    }
    out
}

/// A joint distribution on a rectangular alphabet, stored row major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    rows: Vec<Vec<f64>>,
}

impl JointPmf {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidPmf("joint table must be rectangular and nonempty".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        check_probs(&flat).map_err(Error::InvalidPmf)?;
        Ok(Self { rows })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn product(a: &Pmf, b: &Pmf) -> Self {
        let rows = a
            .as_slice()
            .iter()
            .map(|&p| b.as_slice().iter().map(|&q| p * q).collect())
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows[0].len())
    }

    pub fn row_marginal(&self) -> Pmf {
        Pmf(self.rows.iter().map(|r| r.iter().sum()).collect())
    }

    pub fn col_marginal(&self) -> Pmf {
        let mut out = vec![0.0; self.rows[0].len()];
        for r in &self.rows {
            for (o, &v) in out.iter_mut().zip(r) {
                *o += v;
            }
        }
        Pmf(out)
    }

    /// Conditional of the column given the row. Rows without mass become uniform.
    pub fn conditional(&self) -> CondPmf {
        let rows = self
            .rows
            .iter()
            .map(|r| match Pmf::from_weights(r.clone()) {
                Some(p) => p.into_vec(),
                None => vec![1.0 / r.len() as f64; r.len()],
            })
            .collect();
        CondPmf { rows }
    }

    pub fn transpose(&self) -> Self {
        let (a, b) = self.shape();
        let rows = (0..b).map(|j| (0..a).map(|i| self.rows[i][j]).collect()).collect();
        Self { rows }
    }
}

/// Symmetric matrix of pairwise Bhattacharyya distances; entries may be `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistMatrix(Vec<Vec<f64>>);

impl DistMatrix {
    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }
}
