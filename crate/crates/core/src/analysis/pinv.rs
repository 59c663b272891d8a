//! Pseudoinverse of a column-partitioned matrix `[U1 .. US]`.
//!
//! The recursive form appends one block at a time:
//!
//! ```text
//! [U1..U(q+1)]^+ = [ V - V U(q+1) C^+ ]      V = [U1..Uq]^+
//!                  [ C^+              ]      C = (I - [U1..Uq] V) U(q+1)
//! ```
//!
//! and holds for any full-column-rank partition. The expanded form, where
//! row block `s` equals `Cs^+ (I - U(s+1) C(s+1)^+ + U(s+1) C(s+1)^+ U(s+2) C(s+2)^+ - ...)`
//! with `C1 = U1`, additionally needs blocks two or more apart to be mutually
//! orthogonal.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative singular-value floor used for rank decisions.
const RANK_TOL: f64 = 1e-10;
/// Relative tolerance on `Ui^T Uj` for the orthogonality precondition.
const ORTHO_TOL: f64 = 1e-10;

/// Moore-Penrose inverse of a full-column-rank matrix via SVD.
fn full_rank_pinv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    full_rank_pinv_scaled(m, 0.0)
}

/// As [`full_rank_pinv`], with singular values also compared against
/// `RANK_TOL * scale` (the norm of the matrix `m` was projected from).
fn full_rank_pinv_scaled(m: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    if m.ncols() == 0 {
        return Ok(DMatrix::zeros(0, m.nrows()));
    }
    if m.ncols() > m.nrows() {
        return Err(Error::RankDeficient);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || svd.singular_values.min() <= RANK_TOL * smax.max(scale) {
        return Err(Error::RankDeficient);
    }
    svd.pseudo_inverse(0.0).map_err(|_| Error::RankDeficient)
}

fn hcat(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(b);
        c += b.ncols();
    }
    out
}

fn vcat(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

fn check_blocks(blocks: &[DMatrix<f64>]) -> Result<()> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("no blocks".into()));
    }
    let rows = blocks[0].nrows();
    if let Some(b) = blocks.iter().find(|b| b.nrows() != rows) {
        return Err(Error::DimensionMismatch { what: "block rows", expected: rows, actual: b.nrows() });
    }
    Ok(())
}

/// Checks `Ui^T Uj = 0` (relative to the block norms) for all `|i - j| >= 2`
/// (1-based indices in the error).
pub fn check_separated_orthogonality(blocks: &[DMatrix<f64>]) -> Result<()> {
    for i in 0..blocks.len() {
        for j in i + 2..blocks.len() {
            let scale = blocks[i].norm() * blocks[j].norm();
            let cross = blocks[i].tr_mul(&blocks[j]).norm();
            if scale > 0.0 && cross > ORTHO_TOL * scale {
                return Err(Error::OrthogonalityViolated(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// Two-block base case: returns `[U1^+ - U1^+ U2 C2^+ ; C2^+]`.
pub fn two_block_pinv(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_blocks(&[u1.clone(), u2.clone()])?;
    let v = full_rank_pinv(u1)?;
    append_block(u1, &v, u2)
}

/// Given `u = [U1..Uq]` and `v = u^+`, returns `[u, next]^+`.
fn append_block(u: &DMatrix<f64>, v: &DMatrix<f64>, next: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c = next - u * (v * next);
    let cp = full_rank_pinv_scaled(&c, next.norm())?;
    let top = v - v * next * &cp;
    Ok(vcat(&[top, cp]))
}

/// Recursive block pseudoinverse. Requires full column rank only.
pub fn partitioned_pinv(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    check_blocks(blocks)?;
    let mut u = blocks[0].clone();
    let mut v = full_rank_pinv(&u)?;
    for next in &blocks[1..] {
        v = append_block(&u, &v, next)?;
        u = hcat(&[u, next.clone()]);
    }
    Ok(v)
}

/// Expanded alternating-product form. Checks the separated-orthogonality
/// precondition first.
pub fn partitioned_pinv_expanded(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    check_blocks(blocks)?;
    check_separated_orthogonality(blocks)?;
    let rows = blocks[0].nrows();
    // C_i^+ for every block, with C_1 = U_1.
    let mut c_pinv = Vec::with_capacity(blocks.len());
    let mut u = blocks[0].clone();
    let mut v = full_rank_pinv(&u)?;
    c_pinv.push(v.clone());
    for next in &blocks[1..] {
        let c = next - &u * (&v * next);
        c_pinv.push(full_rank_pinv_scaled(&c, next.norm())?);
        v = append_block(&u, &v, next)?;
        u = hcat(&[u, next.clone()]);
    }
    let s_max = blocks.len();
    let mut rows_out = Vec::with_capacity(s_max);
    for s in 0..s_max {
        let mut acc = DMatrix::<f64>::identity(rows, rows);
        let mut prod = DMatrix::<f64>::identity(rows, rows);
        for j in s + 1..s_max {
            prod = prod * &blocks[j] * &c_pinv[j];
            let sign = if (j - s) % 2 == 1 { -1.0 } else { 1.0 };
            acc += sign * &prod;
        }
        rows_out.push(&c_pinv[s] * acc);
    }
    Ok(vcat(&rows_out))
}

/// Direct SVD pseudoinverse of the concatenated blocks (reference).
pub fn direct_pinv(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    check_blocks(blocks)?;
    full_rank_pinv(&hcat(blocks))
}

/// `||x - reference||_F / ||reference||_F`.
pub fn relative_difference(x: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (x - reference).norm() / reference.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    /// Blocks with row supports `[s*h, s*h + 2h)`, so blocks two apart share
    /// no rows.
    fn banded(blocks: usize, h: usize, width: usize, seed: u64) -> Vec<DMatrix<f64>> {
        let rows = (blocks + 1) * h;
        (0..blocks)
            .map(|s| {
                let mut b = DMatrix::zeros(rows, width);
                let r = random(2 * h, width, seed + s as u64);
                b.view_mut((s * h, 0), (2 * h, width)).copy_from(&r);
                b
            })
            .collect()
    }

    #[test]
    fn orthogonal_pair_stacks_pinvs() {
        let mut u1 = DMatrix::zeros(4, 1);
        u1[(0, 0)] = 2.0;
        let mut u2 = DMatrix::zeros(4, 2);
        u2[(1, 0)] = 1.0;
        u2[(2, 1)] = 3.0;
        let p = two_block_pinv(&u1, &u2).unwrap();
        let stacked = vcat(&[full_rank_pinv(&u1).unwrap(), full_rank_pinv(&u2).unwrap()]);
        assert!(relative_difference(&p, &stacked) < 1e-14);
    }

    #[test]
    fn two_blocks_without_orthogonality() {
        for seed in 0..20 {
            let u1 = random(9, 2, seed);
            let u2 = random(9, 3, seed + 100);
            let p = two_block_pinv(&u1, &u2).unwrap();
            assert!(relative_difference(&p, &direct_pinv(&[u1, u2]).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn banded_blocks_all_forms_agree() {
        for s in 2..=5 {
            let blocks = banded(s, 3, 2, 7 * s as u64);
            let direct = direct_pinv(&blocks).unwrap();
            assert!(relative_difference(&partitioned_pinv(&blocks).unwrap(), &direct) < 1e-8);
            assert!(relative_difference(&partitioned_pinv_expanded(&blocks).unwrap(), &direct) < 1e-8);
        }
    }

    #[test]
    fn expanded_rejects_non_orthogonal() {
        let blocks = vec![random(8, 2, 1), random(8, 2, 2), random(8, 2, 3)];
        assert_eq!(partitioned_pinv_expanded(&blocks), Err(Error::OrthogonalityViolated(1, 3)));
        // the recursive form needs only full rank
        let direct = direct_pinv(&blocks).unwrap();
        assert!(relative_difference(&partitioned_pinv(&blocks).unwrap(), &direct) < 1e-8);
    }

    #[test]
    fn rank_deficiency_detected() {
        let u1 = random(6, 2, 4);
        let u2 = u1.columns(0, 1).into_owned();
        assert_eq!(partitioned_pinv(&[u1, u2]), Err(Error::RankDeficient));
    }
}
