//! Restricted isometry constants by exhaustion or sampling.
//!
//! Columns are used as-is (no normalization): `delta_k` is the largest
//! deviation of a `k`-column Gram spectrum from 1.

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default cap on the number of subsets an exhaustive search may visit.
pub const DEFAULT_SUBSET_LIMIT: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RipMethod {
    Exact,
    /// Maximum over a random sample of subsets; a lower bound on `delta_k`.
    SampledLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RipEstimate {
    pub order: usize,
    pub delta: f64,
    pub method: RipMethod,
    pub subsets: u128,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `max(lambda_max - 1, 1 - lambda_min)` of the Gram matrix of `cols`.
pub fn subset_delta(a: &DMatrix<f64>, cols: &[usize]) -> f64 {
    if cols.is_empty() {
        return 0.0;
    }
    let sub = a.select_columns(cols);
    let gram = sub.tr_mul(&sub);
    if cols.len() == 1 {
        return (gram[(0, 0)] - 1.0).abs();
    }
    let ev = gram.symmetric_eigenvalues();
    let (lo, hi) = ev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (hi - 1.0).max(1.0 - lo)
}

pub fn rip_bruteforce(a: &DMatrix<f64>, k: usize) -> Result<RipEstimate> {
    rip_bruteforce_limited(a, k, DEFAULT_SUBSET_LIMIT)
}

pub fn rip_bruteforce_limited(a: &DMatrix<f64>, k: usize, limit: u128) -> Result<RipEstimate> {
    let n = a.ncols();
    if k > n {
        return Err(Error::InvalidParameter(format!("order {k} exceeds {n} columns")));
    }
    let subsets = binomial(n, k);
    if subsets > limit {
        return Err(Error::TooLarge { subsets, limit });
    }
    let delta = if k == 0 { 0.0 } else { (0..n).combinations(k).par_bridge().map(|s| subset_delta(a, &s)).reduce(|| 0.0, f64::max) };
    Ok(RipEstimate { order: k, delta, method: RipMethod::Exact, subsets })
}

/// Same statistic over `n_samples` uniformly drawn `k`-subsets.
pub fn rip_sampled(a: &DMatrix<f64>, k: usize, n_samples: usize, seed: u64) -> RipEstimate {
    let n = a.ncols();
    let k = k.min(n);
    let mut rng = rng_from_seed(seed);
    let draws: Vec<Vec<usize>> = (0..n_samples)
        .map(|_| {
            let mut s = sample(&mut rng, n, k).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let delta = draws.par_iter().map(|s| subset_delta(a, s)).reduce(|| 0.0, f64::max);
    RipEstimate { order: k, delta, method: RipMethod::SampledLowerBound, subsets: n_samples as u128 }
}

/// Exact constants `delta_0 ..= delta_kmax` of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipTable {
    deltas: Vec<f64>,
}

impl RipTable {
    pub fn compute(a: &DMatrix<f64>, kmax: usize) -> Result<Self> {
        let kmax = kmax.min(a.ncols());
        let deltas = (0..=kmax).map(|k| rip_bruteforce(a, k).map(|r| r.delta)).collect::<Result<_>>()?;
        Ok(Self { deltas })
    }

    pub fn from_deltas(deltas: Vec<f64>) -> Self {
        Self { deltas }
    }

    pub fn max_order(&self) -> usize {
        self.deltas.len() - 1
    }

    pub fn get(&self, k: usize) -> Result<f64> {
        self.deltas.get(k).copied().ok_or(Error::MissingRipOrder(k))
    }
}

/// Largest violation of each restricted-isometry property over random
/// disjoint support pairs; all should be `<= 0` up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub pairs: usize,
    /// `|<A x, A x'>| - delta_{k+k'} ||x|| ||x'||`
    pub inner_product: f64,
    /// `||A_G^T A_G'||_2 - delta_{k+k'}`
    pub cross_gram: f64,
    /// `||(A_G^T A_G)^{-1}||_2 - 1/(1 - delta_k)`, only where `delta_k < 1`
    pub inverse_gram: f64,
    /// `max_j (delta_j - delta_{j+1})` over `j < k + k'`
    pub monotonicity: f64,
}

impl Lemma1Report {
    pub fn max_violation(&self) -> f64 {
        self.inner_product.max(self.cross_gram).max(self.inverse_gram).max(self.monotonicity)
    }
}

/// Checks the standard restricted-isometry inequalities for supports of
/// sizes `k` and `k2` drawn at random (disjoint) `pairs` times.
pub fn lemma1_checks(a: &DMatrix<f64>, k: usize, k2: usize, pairs: usize, seed: u64) -> Result<Lemma1Report> {
    let n = a.ncols();
    if k == 0 || k2 == 0 || k + k2 > n {
        return Err(Error::InvalidParameter(format!("supports of size {k} and {k2} do not fit in {n} columns")));
    }
    let table = RipTable::compute(a, k + k2)?;
    let d_joint = table.get(k + k2)?;
    let d_k = table.get(k)?;
    let monotonicity = (0..k + k2).map(|j| table.get(j).unwrap() - table.get(j + 1).unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let mut rng = rng_from_seed(seed);
    let mut report = Lemma1Report {
        pairs,
        inner_product: f64::NEG_INFINITY,
        cross_gram: f64::NEG_INFINITY,
        inverse_gram: f64::NEG_INFINITY,
        monotonicity,
    };
    use rand::Rng;
    use rand_distr::StandardNormal;
    for _ in 0..pairs {
        let idx = sample(&mut rng, n, k + k2).into_vec();
        let (g1, g2) = idx.split_at(k);
        let x: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let x2: Vec<f64> = (0..k2).map(|_| rng.sample(StandardNormal)).collect();
        let a1 = a.select_columns(g1);
        let a2 = a.select_columns(g2);
        let v1 = &a1 * nalgebra::DVector::from_vec(x.clone());
        let v2 = &a2 * nalgebra::DVector::from_vec(x2.clone());
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nx2 = x2.iter().map(|v| v * v).sum::<f64>().sqrt();
        report.inner_product = report.inner_product.max(v1.dot(&v2).abs() - d_joint * nx * nx2);
        let cross = a1.tr_mul(&a2);
        report.cross_gram = report.cross_gram.max(cross.singular_values().max() - d_joint);
        if d_k < 1.0 {
            let gram = a1.tr_mul(&a1);
            let lo = gram.symmetric_eigenvalues().min();
            report.inverse_gram = report.inverse_gram.max(1.0 / lo - 1.0 / (1.0 - d_k));
        }
    }
    Ok(report)
}
