use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::lstsq::{least_squares_on_support, RANK_TOL};
use super::{SparseEstimate, StopReason};
use crate::error::{Error, Result};

/// Residual norms at or below this fraction of `||y||` count as exhausted.
const EXHAUSTED_REL: f64 = 1e-13;

/// Greedy selection state: the chosen columns, an orthonormal basis of their
/// span (modified Gram-Schmidt with one re-orthogonalization pass) and the
/// current residual.
pub(crate) struct Greedy<'a> {
    a: &'a DMatrix<f64>,
    y: DVector<f64>,
    y_norm: f64,
    basis: Vec<DVector<f64>>,
    pub support: Vec<usize>,
    pub residual: DVector<f64>,
    pub trace: Vec<f64>,
    pub iterations: usize,
}

pub(crate) enum Added {
    Yes,
    Dependent,
}

impl<'a> Greedy<'a> {
    pub fn new(a: &'a DMatrix<f64>, y: &[f64]) -> Result<Self> {
        if y.len() != a.nrows() {
            return Err(Error::DimensionMismatch { what: "measurement vector", expected: a.nrows(), actual: y.len() });
        }
        let y = DVector::from_column_slice(y);
        let y_norm = y.norm();
        Ok(Self { a, residual: y.clone(), y, y_norm, basis: Vec::new(), support: Vec::new(), trace: vec![y_norm], iterations: 0 })
    }

    /// Seeds the support with known columns; fails if they are dependent.
    pub fn with_known(mut self, known: &[usize]) -> Result<Self> {
        for &j in known {
            if j >= self.a.ncols() {
                return Err(Error::DimensionMismatch { what: "known support index", expected: self.a.ncols(), actual: j });
            }
            if self.support.contains(&j) {
                continue;
            }
            if let Added::Dependent = self.push(j) {
                return Err(Error::RankDeficientSupport);
            }
        }
        let n = self.residual_norm();
        self.trace = vec![n];
        Ok(self)
    }

    pub fn y_norm(&self) -> f64 {
        self.y_norm
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }

    pub fn exhausted(&self, tol: f64) -> bool {
        self.residual_norm() <= tol.max(EXHAUSTED_REL * self.y_norm)
    }

    pub fn max_correlation(&self) -> f64 {
        self.a.tr_mul(&self.residual).amax()
    }

    /// Column in `cols` with the largest `|<a_j, r>|`; lowest index on ties.
    pub fn select(&self, cols: Range<usize>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in cols {
            let c = self.a.column(j).dot(&self.residual).abs();
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        best.map(|(j, _)| j)
    }

    fn push(&mut self, j: usize) -> Added {
        let col = self.a.column(j).into_owned();
        let col_norm = col.norm();
        if col_norm == 0.0 {
            return Added::Dependent;
        }
        let mut v = col;
        for _ in 0..2 {
            for q in &self.basis {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm <= RANK_TOL * col_norm {
            return Added::Dependent;
        }
        v /= norm;
        let p = v.dot(&self.residual);
        self.residual.axpy(-p, &v, 1.0);
        self.basis.push(v);
        self.support.push(j);
        Added::Yes
    }

    /// One greedy step over `cols`. Returns the residual norm before and after
    /// the step, or the reason the step could not be taken.
    pub fn step(&mut self, cols: Range<usize>) -> std::result::Result<(f64, f64), StopReason> {
        let before = self.residual_norm();
        self.iterations += 1;
        let j = self.select(cols).ok_or(StopReason::NoProgress)?;
        if self.support.contains(&j) {
            return Err(StopReason::NoProgress);
        }
        match self.push(j) {
            Added::Yes => {
                let after = self.residual_norm();
                self.trace.push(after);
                Ok((before, after))
            }
            Added::Dependent => Err(StopReason::NoProgress),
        }
    }

    /// Least squares on the final support.
    pub fn finish(self, stop: StopReason) -> Result<SparseEstimate> {
        let mut support = self.support.clone();
        support.sort_unstable();
        let vals = least_squares_on_support(self.a, self.y.as_slice(), &support)?;
        let mut values = vec![0.0; self.a.ncols()];
        for (&j, &v) in support.iter().zip(&vals) {
            values[j] = v;
        }
        Ok(SparseEstimate {
            values,
            support,
            residual_norm: self.residual.norm(),
            iterations: self.iterations,
            residual_trace: self.trace,
            stop,
        })
    }
}
