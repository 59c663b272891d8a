use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold on the diagonal of `R` below which the support is
/// treated as rank-deficient.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Minimizes `||y - A_support v||_2` by Householder QR. Values are returned in
/// the order of `support`.
pub fn least_squares_on_support(a: &DMatrix<f64>, y: &[f64], support: &[usize]) -> Result<Vec<f64>> {
    if support.is_empty() {
        return Ok(Vec::new());
    }
    if y.len() != a.nrows() {
        return Err(Error::DimensionMismatch { what: "measurement vector", expected: a.nrows(), actual: y.len() });
    }
    if support.len() > a.nrows() {
        return Err(Error::RankDeficientSupport);
    }
    if let Some(&bad) = support.iter().find(|&&j| j >= a.ncols()) {
        return Err(Error::DimensionMismatch { what: "support index", expected: a.ncols(), actual: bad });
    }
    let sub = a.select_columns(support);
    let qr = sub.qr();
    let r = qr.r();
    let k = support.len();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= RANK_TOL * max_diag) {
        return Err(Error::RankDeficientSupport);
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, k).into_owned();
    let v = r.solve_upper_triangular(&rhs).ok_or(Error::RankDeficientSupport)?;
    Ok(v.as_slice().to_vec())
}
