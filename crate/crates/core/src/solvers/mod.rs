//! Greedy sparse solvers.
//!
//! All solvers share one incremental orthogonal factorization of the selected
//! columns: the residual is always `(I - P) y` with `P` the projector onto the
//! span of the current support, and the returned values come from a
//! Householder least-squares solve on the final support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod greedy;
mod lstsq;
mod omp;
mod tompp;

pub use lstsq::least_squares_on_support;
pub use omp::{omp, omp_pks};
pub use tompp::{carried_support, tompp};

/// A residual-decrease threshold, either absolute or relative to the norm of
/// the measurement being solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zeta {
    Absolute(f64),
    Relative(f64),
}

impl Zeta {
    pub fn resolve(self, y_norm: f64) -> f64 {
        match self {
            Zeta::Absolute(v) => v,
            Zeta::Relative(f) => f * y_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Phase-1 stop: residual-norm decrease at most `zeta1`.
    pub zeta1: Zeta,
    /// Phase-2 stop; must be below `zeta1`.
    pub zeta2: Zeta,
    /// Cap on the support size; defaults to the number of rows.
    pub max_atoms: Option<usize>,
    /// Stop once `||r||_2 <= residual_tol`.
    pub residual_tol: f64,
    /// Stop once `||A^T r||_inf <= correlation_tol`.
    pub correlation_tol: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { zeta1: Zeta::Relative(0.05), zeta2: Zeta::Relative(0.01), max_atoms: None, residual_tol: 0.0, correlation_tol: None }
    }
}

impl SolverParams {
    /// Plain OMP stopped on the residual norm.
    pub fn residual_stop(tol: f64) -> Self {
        Self { residual_tol: tol, ..Self::default() }
    }

    /// Plain OMP stopped on the largest residual correlation.
    pub fn correlation_stop(tol: f64) -> Self {
        Self { correlation_tol: Some(tol), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !(v.is_finite() && v >= 0.0);
        match (self.zeta1, self.zeta2) {
            (Zeta::Absolute(a), Zeta::Absolute(b)) | (Zeta::Relative(a), Zeta::Relative(b)) => {
                if bad(a) || bad(b) || a <= 0.0 || b >= a {
                    return Err(Error::InvalidParameter(format!("thresholds need 0 <= zeta2 < zeta1 (got {a}, {b})")));
                }
            }
            (a, b) => {
                let (a, b) = (a.resolve(1.0), b.resolve(1.0));
                if bad(a) || bad(b) {
                    return Err(Error::InvalidParameter("thresholds must be finite and non-negative".into()));
                }
            }
        }
        if bad(self.residual_tol) {
            return Err(Error::InvalidParameter(format!("residual_tol={} must be >= 0", self.residual_tol)));
        }
        if let Some(t) = self.correlation_tol {
            if bad(t) {
                return Err(Error::InvalidParameter(format!("correlation_tol={t} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Why a greedy loop terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Residual or correlation fell below its tolerance.
    Converged,
    /// Residual-norm decrease fell below the active threshold.
    Threshold,
    MaxAtoms,
    /// The best atom was already selected, or would make the support
    /// rank-deficient; it was rejected.
    NoProgress,
}

/// Result of a greedy solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    /// Full-length coefficient vector; zero off the support.
    pub values: Vec<f64>,
    /// Sorted support.
    pub support: Vec<usize>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Residual norm before the first selection and after every accepted atom.
    pub residual_trace: Vec<f64>,
    pub stop: StopReason,
}

impl SparseEstimate {
    pub fn zero(len: usize, residual_norm: f64) -> Self {
        Self {
            values: vec![0.0; len],
            support: Vec::new(),
            residual_norm,
            iterations: 0,
            residual_trace: vec![residual_norm],
            stop: StopReason::Converged,
        }
    }
}
