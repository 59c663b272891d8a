//! Comparison of a naive non-overlapping segmentation with the sliding one.
//!
//! Cutting `y` into disjoint row blocks and keeping every column that touches
//! a block truncates the bands of the last columns, which become (nearly)
//! collinear. Sliding segments keep every column band whole.

use std::ops::Range;

use serde::Serialize;

use super::rip::rip_bruteforce;
use crate::error::{Error, Result};
use crate::radar::RadarConfig;
use crate::sampler::MeasurementMatrix;
use crate::segment::segment_views;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveSegment {
    pub index: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub min_singular_value: f64,
    pub delta2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlidingSegment {
    pub index: usize,
    pub delta2: f64,
    /// `delta_2` of the same columns taken over all rows of `A`.
    pub parent_delta2: f64,
    /// Every column is zero outside the segment's rows.
    pub bands_inherited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveReport {
    pub naive: Vec<NaiveSegment>,
    pub sliding: Vec<SlidingSegment>,
}

impl NaiveReport {
    pub fn max_naive_delta2(&self) -> f64 {
        self.naive.iter().map(|s| s.delta2).fold(0.0, f64::max)
    }

    /// Bands are compared exactly; the isometry constants only up to the
    /// rounding of Gram products that include the extra zero rows.
    pub fn sliding_inherits(&self) -> bool {
        self.sliding.iter().all(|s| s.bands_inherited && (s.delta2 - s.parent_delta2).abs() <= 1e-12 * s.parent_delta2.max(1.0))
    }
}

/// `rows_per_segment` sets the naive block height; the sliding segments come
/// from `config`.
pub fn naive_segmentation_diagnostic(a: &MeasurementMatrix, config: &RadarConfig, rows_per_segment: usize) -> Result<NaiveReport> {
    if rows_per_segment == 0 {
        return Err(Error::InvalidParameter("rows_per_segment must be positive".into()));
    }
    let m = a.nrows();
    let mut naive = Vec::new();
    for (i, start) in (0..m).step_by(rows_per_segment).enumerate() {
        let rows = start..(start + rows_per_segment).min(m);
        let touching: Vec<usize> =
            a.bands.iter().enumerate().filter(|(_, b)| b.first_row < rows.end && b.last_row >= rows.start).map(|(n, _)| n).collect();
        let (Some(&first), Some(&last)) = (touching.first(), touching.last()) else { continue };
        let cols = first..last + 1;
        let sub = a.entries.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned();
        let min_singular_value = if sub.ncols() > sub.nrows() { 0.0 } else { sub.singular_values().min() };
        let delta2 = if sub.ncols() >= 2 { rip_bruteforce(&sub, 2)?.delta } else { rip_bruteforce(&sub, 1)?.delta };
        naive.push(NaiveSegment { index: i + 1, rows, cols, min_singular_value, delta2 });
    }
    let zero_y = vec![0.0; m];
    let mut sliding = Vec::new();
    for view in segment_views(a, &zero_y, config)? {
        let parent = a.entries.columns(view.coeff_range.start, view.cols()).into_owned();
        let bands_inherited = view
            .coeff_range
            .clone()
            .all(|n| a.entries.column(n).iter().enumerate().all(|(r, v)| view.meas_range.contains(&r) || *v == 0.0));
        sliding.push(SlidingSegment {
            index: view.index,
            delta2: rip_bruteforce(&view.sub_matrix, 2)?.delta,
            parent_delta2: rip_bruteforce(&parent, 2)?.delta,
            bands_inherited,
        });
    }
    Ok(NaiveReport { naive, sliding })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::lfm_waveform;
    use crate::sampler::{build_measurement_matrix, make_chipping};

    #[test]
    fn toy_instance() {
        let c = RadarConfig::new(10e6, 0.9e-6, 5.4e-6, 3, 3, 1).unwrap();
        let a = build_measurement_matrix(&c, &lfm_waveform(&c), &make_chipping(&c, 1)).unwrap();
        let r = naive_segmentation_diagnostic(&a, &c, 2 * c.mp).unwrap();
        assert_eq!(r.naive.len(), 3);
        assert_eq!(r.naive[0].rows, 0..6);
        assert_eq!(r.naive[0].cols, 0..18);
        assert!(r.max_naive_delta2() > 0.9);
        assert!(r.sliding_inherits());
    }

    #[test]
    fn whole_matrix_is_its_own_naive_segment() {
        let c = RadarConfig::new(10e6, 0.9e-6, 5.4e-6, 3, 3, 1).unwrap();
        let a = build_measurement_matrix(&c, &lfm_waveform(&c), &make_chipping(&c, 2)).unwrap();
        let r = naive_segmentation_diagnostic(&a, &c, c.m).unwrap();
        assert_eq!(r.naive.len(), 1);
        assert_eq!(r.naive[0].delta2, rip_bruteforce(&a.entries, 2).unwrap().delta);
    }
}
