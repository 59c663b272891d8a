//! Virtual-noise bounds, support-recovery conditions and least-squares
//! amplitude-error bounds for one segment.

use serde::Serialize;

use super::rip::RipTable;
use crate::error::{Error, Result};
use crate::segment::SegmentView;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn nnz(v: &[f64]) -> usize {
    v.iter().filter(|x| **x != 0.0).count()
}

/// Bounds on the virtual noise of one segment. The `a` terms come from the
/// previous segment's estimation error, the `b` terms from the block after
/// the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBounds {
    pub eps2: f64,
    pub eps_inf: f64,
    pub a2: f64,
    pub b2: f64,
    pub a_inf: f64,
    pub b_inf: f64,
}

/// A coefficient block leaking into the segment together with the RIP table
/// of the neighbouring segment matrix that holds its columns in full.
#[derive(Debug, Clone, Copy)]
pub struct Leak<'a> {
    pub values: &'a [f64],
    pub rip: &'a RipTable,
}

fn leak_terms(leak: Option<Leak<'_>>) -> Result<(f64, f64)> {
    let Some(leak) = leak else { return Ok((0.0, 0.0)) };
    let k = nnz(leak.values);
    let n = norm(leak.values);
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let d2 = leak.rip.get(k)?;
    let dinf = leak.rip.get(k + 1)?;
    Ok(((1.0 + d2).sqrt() * n, dinf * n))
}

/// `prev` is absent for the first segment, `next` for the last.
pub fn theorem1_bounds(prev: Option<Leak<'_>>, next: Option<Leak<'_>>) -> Result<NoiseBounds> {
    let (a2, a_inf) = leak_terms(prev)?;
    let (b2, b_inf) = leak_terms(next)?;
    Ok(NoiseBounds { eps2: a2 + b2, eps_inf: a_inf + b_inf, a2, b2, a_inf, b_inf })
}

/// Bounds for segment `views[l-1]` given the truth, the previous segment's
/// estimate over the slid-out blocks and exact RIP tables of every segment
/// matrix (`rips[i]` belongs to `views[i]`).
pub fn segment_theorem1(
    views: &[SegmentView],
    l: usize,
    sigma: &[f64],
    prev_block_estimate: Option<&[f64]>,
    rips: &[RipTable],
) -> Result<NoiseBounds> {
    let view = views.get(l.wrapping_sub(1)).ok_or(Error::IndexOutOfRange { index: l, count: views.len() })?;
    let prev_err: Option<Vec<f64>> = view.boundary_prev.as_ref().map(|_| {
        let truth = &sigma[view.prev_range()];
        match prev_block_estimate {
            Some(est) => truth.iter().zip(est).map(|(t, e)| t - e).collect(),
            None => truth.to_vec(),
        }
    });
    let next_vals = view.boundary_next.as_ref().map(|_| &sigma[view.next_range()]);
    let prev = match &prev_err {
        Some(v) => Some(Leak { values: v, rip: rips.get(l - 2).ok_or(Error::MissingRipOrder(0))? }),
        None => None,
    };
    let next = match next_vals {
        Some(v) => Some(Leak { values: v, rip: rips.get(l).ok_or(Error::MissingRipOrder(0))? }),
        None => None,
    };
    theorem1_bounds(prev, next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryConditions {
    pub condition_ok: bool,
    /// Minimum nonzero magnitude under an l2 noise bound.
    pub min_magnitude_l2: f64,
    /// Minimum nonzero magnitude under a correlation noise bound.
    pub min_magnitude_linf: f64,
}

/// `delta` is the RIP constant of order `support_size + 1`.
pub fn recovery_conditions(delta: f64, support_size: usize, eps2: f64, eps_inf: f64) -> RecoveryConditions {
    let sk = (support_size as f64).sqrt();
    let condition_ok = delta < 1.0 / (sk + 1.0);
    let denom = 1.0 - (sk + 1.0) * delta;
    let num = (1.0 + delta).sqrt() + 1.0;
    let (l2, linf) = if condition_ok { (num * eps2 / denom, num * sk * eps_inf / denom) } else { (f64::INFINITY, f64::INFINITY) };
    RecoveryConditions { condition_ok, min_magnitude_l2: l2, min_magnitude_linf: linf }
}

/// Per-block bound on the least-squares amplitude error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeBound {
    pub k_bar: usize,
    pub delta_bar: f64,
    pub alpha: f64,
    /// `beta[s-1]` for block `s`.
    pub beta: Vec<f64>,
    /// `bound[s-1]` for block `s`.
    pub bound: Vec<f64>,
}

pub fn alpha(delta_bar: f64) -> f64 {
    delta_bar / (1.0 - delta_bar)
}

/// `alpha^s (1 - alpha^(2(S-s+1))) / (1 - alpha^2)`, continuous at `alpha = 1`.
pub fn beta(alpha: f64, s: usize, segment_pulses: usize) -> f64 {
    let n = (segment_pulses - s + 1) as i32;
    let a2 = alpha * alpha;
    if (a2 - 1.0).abs() < 1e-12 {
        return alpha.powi(s as i32) * n as f64;
    }
    alpha.powi(s as i32) * (1.0 - a2.powi(n)) / (1.0 - a2)
}

/// Bound for every block `s = 1..=S` given `delta_bar`. `prev_error_norm` is
/// absent for the first segment and `next_block_norm` for the last.
pub fn amplitude_bound(
    delta_bar: f64,
    k_bar: usize,
    segment_pulses: usize,
    prev_error_norm: Option<f64>,
    next_block_norm: Option<f64>,
) -> Result<AmplitudeBound> {
    if !(0.0..1.0).contains(&delta_bar) {
        return Err(Error::InvalidParameter(format!("amplitude bound needs delta in [0, 1), got {delta_bar}")));
    }
    let a = alpha(delta_bar);
    let s_max = segment_pulses;
    let beta: Vec<f64> = (1..=s_max).map(|s| beta(a, s, s_max)).collect();
    let bound = (1..=s_max)
        .map(|s| {
            let fwd = prev_error_norm.map_or(0.0, |e| beta[s - 1] * e);
            let bwd = next_block_norm.map_or(0.0, |n| a.powi((s_max - s + 1) as i32) * n);
            fwd + bwd
        })
        .collect();
    Ok(AmplitudeBound { k_bar, delta_bar, alpha: a, beta, bound })
}

/// `supports[i]` and `rips[i]` describe segments `l-1`, `l`, `l+1` (absent at
/// the ends); `K` and `delta` are maximized over the segments present.
pub fn theorem4_bounds(
    rips: [Option<&RipTable>; 3],
    supports: [Option<usize>; 3],
    segment_pulses: usize,
    prev_error_norm: Option<f64>,
    next_block_norm: Option<f64>,
) -> Result<AmplitudeBound> {
    let k_bar = supports.iter().flatten().copied().max().unwrap_or(0);
    let mut delta_bar = 0.0f64;
    for rip in rips.iter().flatten() {
        delta_bar = delta_bar.max(rip.get(k_bar)?);
    }
    amplitude_bound(delta_bar, k_bar, segment_pulses, prev_error_norm, next_block_norm)
}
