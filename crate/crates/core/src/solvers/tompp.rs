use nalgebra::DMatrix;

use super::greedy::Greedy;
use super::omp::atom_cap;
use super::{SolverParams, SparseEstimate, StopReason};
use crate::error::{Error, Result};

/// Support inherited from the previous segment's estimate: nonzeros at
/// indices `>= shift`, re-indexed by `-shift`.
pub fn carried_support(prev_values: &[f64], shift: usize) -> Vec<usize> {
    prev_values.iter().enumerate().skip(shift).filter(|(_, v)| **v != 0.0).map(|(j, _)| j - shift).collect()
}

/// Two-phase OMP with partially known support.
///
/// Phase 1 adds atoms over all columns until the residual-norm decrease is at
/// most `zeta1`. Phase 2 continues over the first `ncols - np` columns only
/// (the leading blocks that will not be carried into the next segment) until
/// the decrease is at most `zeta2`. The atom that triggers a stop is kept.
pub fn tompp(a: &DMatrix<f64>, y_virt: &[f64], known: &[usize], np: usize, params: &SolverParams) -> Result<SparseEstimate> {
    params.validate()?;
    if np == 0 || np > a.ncols() {
        return Err(Error::InvalidParameter(format!("block width {np} incompatible with {} columns", a.ncols())));
    }
    let g = Greedy::new(a, y_virt)?.with_known(known)?;
    let zeta1 = params.zeta1.resolve(g.y_norm());
    let zeta2 = params.zeta2.resolve(g.y_norm());
    let cap = atom_cap(a, params);
    let mut g = g;

    let run = |g: &mut Greedy, cols: usize, zeta: f64| loop {
        if g.exhausted(params.residual_tol) {
            return StopReason::Converged;
        }
        if g.support.len() >= cap {
            return StopReason::MaxAtoms;
        }
        match g.step(0..cols) {
            Ok((before, after)) if before - after <= zeta => return StopReason::Threshold,
            Ok(_) => {}
            Err(reason) => return reason,
        }
    };

    let mut stop = run(&mut g, a.ncols(), zeta1);
    if stop == StopReason::Threshold && a.ncols() > np {
        stop = run(&mut g, a.ncols() - np, zeta2);
    }
    g.finish(stop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::solvers::{omp_pks, Zeta};
    use nalgebra::DVector;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal) / (rows as f64).sqrt())
    }

    #[test]
    fn carried_support_shifts() {
        let prev = [1.0, 0.0, 2.0, 0.0, 0.0, -1.0, 0.0, 3.0];
        assert_eq!(carried_support(&prev, 3), vec![2, 4]);
        assert_eq!(carried_support(&prev, 0), vec![0, 2, 5, 7]);
        assert!(carried_support(&prev, 8).is_empty());
    }

    #[test]
    fn phase_two_confined_to_leading_blocks() {
        let np = 5;
        for seed in 0..20u64 {
            let a = gaussian(12, 15, seed);
            let mut rng = rng_from_seed(seed + 77);
            let y: Vec<f64> = (0..12).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let p = SolverParams { zeta1: Zeta::Relative(0.2), zeta2: Zeta::Relative(1e-4), ..SolverParams::default() };
            let phase1 = omp_pks(&a, &y, &[], &p).unwrap();
            let est = tompp(&a, &y, &[], np, &p).unwrap();
            for j in &est.support {
                assert!(*j < 15 - np || phase1.support.contains(j), "seed {seed}: atom {j} outside phase-2 range");
            }
            assert!(phase1.support.iter().all(|j| est.support.contains(j)));
        }
    }

    #[test]
    fn exact_known_support_adds_nothing() {
        let a = gaussian(10, 15, 4);
        let mut x = vec![0.0; 15];
        x[3] = 1.5;
        x[11] = -0.5;
        let y = (&a * DVector::from_vec(x.clone())).as_slice().to_vec();
        let p = SolverParams { zeta1: Zeta::Absolute(1e6), zeta2: Zeta::Absolute(1e5), ..SolverParams::default() };
        let est = tompp(&a, &y, &[3, 11], 5, &p).unwrap();
        assert_eq!(est.support, vec![3, 11]);
        assert_eq!(est.iterations, 0);
        for (e, t) in est.values.iter().zip(&x) {
            assert!((e - t).abs() < 1e-10);
        }
    }

    #[test]
    fn huge_thresholds_add_one_atom_per_phase_at_most() {
        let a = gaussian(10, 15, 5);
        let y: Vec<f64> = (0..10).map(|i| (i as f64 + 1.0).ln()).collect();
        let p = SolverParams { zeta1: Zeta::Absolute(1e6), zeta2: Zeta::Absolute(1e5), ..SolverParams::default() };
        let est = tompp(&a, &y, &[], 5, &p).unwrap();
        assert!(est.support.len() <= 2);
        assert_eq!(est.stop, StopReason::Threshold);
    }

    #[test]
    fn rejects_bad_block_width() {
        let a = gaussian(4, 6, 1);
        assert!(tompp(&a, &[1.0; 4], &[], 0, &SolverParams::default()).is_err());
        assert!(tompp(&a, &[1.0; 4], &[], 7, &SolverParams::default()).is_err());
    }
}
