//! Randomized bound-check suites on small instances with exact isometry
//! constants.

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use segsr_core::analysis::bounds::{segment_theorem1, theorem4_bounds};
use segsr_core::analysis::rip::RipTable;
use segsr_core::rng::{derive_seed, rng_from_seed, Stream};
use segsr_core::segment::{oracle_virtual_noise, segment_views, virtual_measurement, SegmentView};
use segsr_core::solvers::least_squares_on_support;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::experiment::trial_data;

/// Relative slack for floating-point comparisons of a measured quantity
/// against its bound.
pub const BOUND_RTOL: f64 = 1e-9;

fn within(measured: f64, bound: f64) -> bool {
    measured <= bound * (1.0 + BOUND_RTOL) + 1e-12
}

fn nnz(v: &[f64]) -> usize {
    v.iter().filter(|x| **x != 0.0).count()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One segment of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseBoundRecord {
    pub cell: usize,
    pub trial: usize,
    pub segment: usize,
    pub error_support: usize,
    pub noise_l2: f64,
    pub eps2: f64,
    pub correlation_inf: f64,
    pub eps_inf: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeBoundRecord {
    pub cell: usize,
    pub trial: usize,
    pub segment: usize,
    pub k_bar: usize,
    pub delta_bar: f64,
    /// `||error on block s||_2`, `s = 1..=S`.
    pub block_errors: Vec<f64>,
    /// Empty when `delta_bar >= 1` (the bound does not apply).
    pub bounds: Vec<f64>,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    /// Records where the bound's precondition failed.
    pub inapplicable: usize,
    /// Checked records with a positive bound (something could leak).
    pub nontrivial: usize,
    pub max_ratio: f64,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.violations == 0
    }
}

/// Exact RIP table of every segment matrix up to `orders[i]`.
fn rip_tables(views: &[SegmentView], orders: &[usize]) -> CliResult<Vec<RipTable>> {
    views.iter().zip(orders).map(|(v, &k)| Ok(RipTable::compute(&v.sub_matrix, k.min(v.cols()))?)).collect()
}

/// Truth over `range` with up to `max_errors` entries perturbed.
fn perturbed_block(truth: &[f64], max_errors: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut est = truth.to_vec();
    let k = rng.random_range(0..=max_errors.min(truth.len()));
    for i in sample(rng, truth.len(), k) {
        let e: f64 = rng.sample(StandardNormal);
        est[i] += 0.5 * e;
    }
    est
}

/// Virtual-noise bounds: the previous segment's estimate of the slid-out
/// blocks is the truth with at most `max_errors` perturbed entries.
pub fn theorem1_suite(cfg: &ExperimentConfig, max_errors: usize) -> CliResult<(SuiteSummary, Vec<NoiseBoundRecord>)> {
    let jobs: Vec<_> = cfg.cells().into_iter().flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    let per_trial: Vec<Vec<NoiseBoundRecord>> = jobs
        .par_iter()
        .map(|(cell, trial)| -> CliResult<Vec<NoiseBoundRecord>> {
            let data = trial_data(cfg, cell, *trial)?;
            let sigma = &data.scene.coefficients;
            let views = segment_views(&data.matrix, &data.y, &data.config)?;
            let mut rng = rng_from_seed(derive_seed(cfg.seed, Stream::Auxiliary, &[cell.id as u64, *trial as u64]));
            let estimates: Vec<Option<Vec<f64>>> = views
                .iter()
                .map(|v| v.boundary_prev.as_ref().map(|_| perturbed_block(&sigma[v.prev_range()], max_errors, &mut rng)))
                .collect();
            // order k + 1 of segment l-1 (forward leak) and l+1 (backward leak)
            let mut orders = vec![1usize; views.len()];
            for (i, v) in views.iter().enumerate() {
                if let Some(est) = &estimates[i] {
                    let err: Vec<f64> = sigma[v.prev_range()].iter().zip(est).map(|(t, e)| t - e).collect();
                    orders[i - 1] = orders[i - 1].max(nnz(&err) + 1);
                }
                if v.boundary_next.is_some() {
                    orders[i + 1] = orders[i + 1].max(nnz(&sigma[v.next_range()]) + 1);
                }
            }
            let rips = rip_tables(&views, &orders)?;
            let mut out = Vec::new();
            for (i, v) in views.iter().enumerate() {
                let est = estimates[i].as_deref();
                let b = segment_theorem1(&views, i + 1, sigma, est, &rips)?;
                let vn = oracle_virtual_noise(v, sigma, est);
                let n = DVector::from_column_slice(&vn.n_virt);
                let corr = v.sub_matrix.tr_mul(&n).amax();
                let l2 = n.norm();
                let error_support = match est {
                    Some(e) => sigma[v.prev_range()].iter().zip(e).filter(|(t, e)| t != e).count(),
                    None => 0,
                };
                out.push(NoiseBoundRecord {
                    cell: cell.id,
                    trial: *trial,
                    segment: i + 1,
                    error_support,
                    noise_l2: l2,
                    eps2: b.eps2,
                    correlation_inf: corr,
                    eps_inf: b.eps_inf,
                    holds: within(l2, b.eps2) && within(corr, b.eps_inf),
                });
            }
            Ok(out)
        })
        .collect::<CliResult<_>>()?;
    let records: Vec<NoiseBoundRecord> = per_trial.into_iter().flatten().collect();
    let ratio = |m: f64, b: f64| {
        if b > 0.0 {
            m / b
        } else if m > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let summary = SuiteSummary {
        name: "virtual-noise bounds",
        checked: records.len(),
        violations: records.iter().filter(|r| !r.holds).count(),
        inapplicable: 0,
        nontrivial: records.iter().filter(|r| r.eps2 > 0.0).count(),
        max_ratio: records.iter().map(|r| ratio(r.noise_l2, r.eps2).max(ratio(r.correlation_inf, r.eps_inf))).fold(0.0, f64::max),
    };
    Ok((summary, records))
}

/// Least-squares amplitude-error bounds with the true support of every
/// segment, chaining each segment's estimate into the next virtual
/// measurement.
pub fn theorem4_suite(cfg: &ExperimentConfig) -> CliResult<(SuiteSummary, Vec<AmplitudeBoundRecord>)> {
    let jobs: Vec<_> = cfg.cells().into_iter().flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    let per_trial: Vec<Vec<AmplitudeBoundRecord>> = jobs
        .par_iter()
        .map(|(cell, trial)| -> CliResult<Vec<AmplitudeBoundRecord>> {
            let data = trial_data(cfg, cell, *trial)?;
            let sigma = &data.scene.coefficients;
            let np = data.config.np;
            let s_max = data.config.segment_pulses;
            let views = segment_views(&data.matrix, &data.y, &data.config)?;
            let supports: Vec<Vec<usize>> = views
                .iter()
                .map(|v| sigma[v.coeff_range.clone()].iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, _)| i).collect())
                .collect();
            let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(views.len());
            let mut out = Vec::new();
            for (i, v) in views.iter().enumerate() {
                let prev = (i > 0).then(|| &estimates[i - 1][..v.slide_blocks * np]);
                let yv = virtual_measurement(v, prev)?.y_virt;
                let vals = least_squares_on_support(&v.sub_matrix, &yv, &supports[i])?;
                let mut est = vec![0.0; v.cols()];
                for (&j, x) in supports[i].iter().zip(vals) {
                    est[j] = x;
                }
                estimates.push(est);
            }
            for (i, v) in views.iter().enumerate() {
                let local = &sigma[v.coeff_range.clone()];
                let errors: Vec<f64> =
                    (1..=s_max).map(|s| v.block_columns(s).map(|j| (estimates[i][j] - local[j]).powi(2)).sum::<f64>().sqrt()).collect();
                let idx = [i.checked_sub(1), Some(i), (i + 1 < views.len()).then_some(i + 1)];
                let sizes = idx.map(|j| j.map(|j| supports[j].len()));
                let k_bar = sizes.iter().flatten().copied().max().unwrap_or(0);
                let tables: Vec<Option<RipTable>> = idx
                    .iter()
                    .map(|j| j.map(|j| RipTable::compute(&views[j].sub_matrix, k_bar.min(views[j].cols()))).transpose())
                    .collect::<Result<_, _>>()?;
                let rips = [tables[0].as_ref(), tables[1].as_ref(), tables[2].as_ref()];
                // error of the previous segment on the blocks that slid out
                let prev_err = (i > 0).then(|| {
                    let pv = &views[i - 1];
                    let w = v.slide_blocks * np;
                    let truth = &sigma[pv.coeff_range.start..pv.coeff_range.start + w];
                    norm(&estimates[i - 1][..w].iter().zip(truth).map(|(e, t)| e - t).collect::<Vec<_>>())
                });
                let next = v.boundary_next.as_ref().map(|_| norm(&sigma[v.next_range()]));
                let mut rec = AmplitudeBoundRecord {
                    cell: cell.id,
                    trial: *trial,
                    segment: i + 1,
                    k_bar,
                    delta_bar: 0.0,
                    block_errors: errors,
                    bounds: Vec::new(),
                    holds: None,
                };
                match theorem4_bounds(rips, sizes, s_max, prev_err, next) {
                    Ok(b) => {
                        rec.delta_bar = b.delta_bar;
                        rec.holds = Some(rec.block_errors.iter().zip(&b.bound).all(|(m, b)| within(*m, *b)));
                        rec.bounds = b.bound;
                    }
                    Err(segsr_core::Error::InvalidParameter(_)) => {
                        rec.delta_bar = rips.iter().flatten().map(|r| r.get(k_bar).unwrap_or(f64::NAN)).fold(0.0, f64::max);
                    }
                    Err(e) => return Err(e.into()),
                }
                out.push(rec);
            }
            Ok(out)
        })
        .collect::<CliResult<_>>()?;
    let records: Vec<AmplitudeBoundRecord> = per_trial.into_iter().flatten().collect();
    let applicable: Vec<_> = records.iter().filter(|r| r.holds.is_some()).collect();
    let max_ratio = applicable
        .iter()
        .flat_map(|r| {
            r.block_errors.iter().zip(&r.bounds).map(|(m, b)| {
                if *b > 0.0 {
                    m / b
                } else if *m > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
        })
        .fold(0.0, f64::max);
    let summary = SuiteSummary {
        name: "least-squares amplitude bounds",
        checked: applicable.len(),
        violations: applicable.iter().filter(|r| r.holds == Some(false)).count(),
        inapplicable: records.len() - applicable.len(),
        nontrivial: applicable.iter().filter(|r| r.k_bar > 0).count(),
        max_ratio,
    };
    Ok((summary, records))
}

/// Default configuration of the bound suites: 12 x 18 segment matrices
/// (`Np = 6`, `R = 2`, `S = 3`) with a unit-energy pulse.
pub fn default_bounds_config(trials: usize, seed: u64) -> ExperimentConfig {
    toml::from_str(&format!(
        r#"
        schema_version = 1
        name = "bounds"
        profile = "small"
        trials = {trials}
        seed = {seed}
        [radar]
        unit_energy = true
        [scene]
        p = [0.05, 0.1]
        [solver]
        methods = ["omp-pks"]
        [sweep]
        segment_pulses = [2, 3]
        slide_pulses = [1, 2]
        "#
    ))
    .expect("built-in config parses")
}
