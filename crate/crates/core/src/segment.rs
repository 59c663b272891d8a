//! Segment windows of the sliding reconstruction.
//!
//! Segment `l` covers `S` pulse blocks of coefficients starting at block
//! `b_l` and the `(S + 1) * Mp` measurements starting at row `b_l * Mp`. Every
//! column band of those blocks lies completely inside the measurement window.
//! Two boundary matrices carry what leaks into the window from outside: the
//! blocks that slid out since the previous segment (only the last of them
//! reaches the first `Mp` rows) and the block right after the window (which
//! reaches the last `Mp` rows).

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::radar::RadarConfig;
use crate::sampler::MeasurementMatrix;

/// Windowed view of the measurement problem for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentView {
    /// 1-based segment index.
    pub index: usize,
    pub count: usize,
    pub np: usize,
    pub mp: usize,
    pub segment_pulses: usize,
    pub start_block: usize,
    /// Blocks slid out since the previous segment; zero for the first segment.
    pub slide_blocks: usize,
    pub coeff_range: Range<usize>,
    pub meas_range: Range<usize>,
    pub sub_matrix: DMatrix<f64>,
    /// `M~ x (slide_blocks * Np)`; absent for the first segment.
    pub boundary_prev: Option<DMatrix<f64>>,
    /// `M~ x Np`; absent for the last segment.
    pub boundary_next: Option<DMatrix<f64>>,
    pub y: Vec<f64>,
}

impl SegmentView {
    pub fn rows(&self) -> usize {
        self.meas_range.len()
    }

    pub fn cols(&self) -> usize {
        self.coeff_range.len()
    }

    pub fn is_first(&self) -> bool {
        self.index == 1
    }

    pub fn is_last(&self) -> bool {
        self.index == self.count
    }

    /// Global coefficient indices multiplied by `boundary_prev`.
    pub fn prev_range(&self) -> Range<usize> {
        let start = self.coeff_range.start;
        start - self.slide_blocks * self.np..start
    }

    /// Global coefficient indices multiplied by `boundary_next`.
    pub fn next_range(&self) -> Range<usize> {
        let end = self.coeff_range.end;
        end..end + self.np
    }

    /// Local column range of block `s` (1-based) inside the segment.
    pub fn block_columns(&self, s: usize) -> Range<usize> {
        (s - 1) * self.np..s * self.np
    }

    /// Sub-matrix columns of block `s` (1-based).
    pub fn block(&self, s: usize) -> DMatrix<f64> {
        self.sub_matrix.columns((s - 1) * self.np, self.np).into_owned()
    }
}

fn submatrix(a: &DMatrix<f64>, rows: &Range<usize>, cols: &Range<usize>) -> DMatrix<f64> {
    a.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
}

/// Extracts the windows and boundary matrices of segment `l` (1-based).
pub fn segment_view(a: &MeasurementMatrix, y: &[f64], config: &RadarConfig, l: usize) -> Result<SegmentView> {
    let count = config.segment_count();
    if l < 1 || l > count {
        return Err(Error::IndexOutOfRange { index: l, count });
    }
    if a.nrows() != config.m || a.ncols() != config.n {
        return Err(Error::DimensionMismatch { what: "measurement matrix columns", expected: config.n, actual: a.ncols() });
    }
    if y.len() != config.m {
        return Err(Error::DimensionMismatch { what: "measurement vector", expected: config.m, actual: y.len() });
    }
    let (np, mp, s) = (config.np, config.mp, config.segment_pulses);
    let b = config.segment_start_block(l);
    let slide_blocks = if l == 1 { 0 } else { b - config.segment_start_block(l - 1) };
    let coeff_range = b * np..(b + s) * np;
    let meas_range = b * mp..(b + s + 1) * mp;
    let sub_matrix = submatrix(&a.entries, &meas_range, &coeff_range);
    let boundary_prev = (l > 1).then(|| submatrix(&a.entries, &meas_range, &((b - slide_blocks) * np..b * np)));
    let boundary_next = (coeff_range.end < config.n).then(|| submatrix(&a.entries, &meas_range, &(coeff_range.end..coeff_range.end + np)));
    Ok(SegmentView {
        index: l,
        count,
        np,
        mp,
        segment_pulses: s,
        start_block: b,
        slide_blocks,
        y: y[meas_range.clone()].to_vec(),
        coeff_range,
        meas_range,
        sub_matrix,
        boundary_prev,
        boundary_next,
    })
}

/// All segment views of a problem.
pub fn segment_views(a: &MeasurementMatrix, y: &[f64], config: &RadarConfig) -> Result<Vec<SegmentView>> {
    (1..=config.segment_count()).map(|l| segment_view(a, y, config, l)).collect()
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> DVector<f64> {
    m * DVector::from_column_slice(v)
}

/// Norm of the residual of the exact three-term decomposition of `y~(l)` for
/// a noiseless `y = A sigma`.
pub fn decompose_check(view: &SegmentView, sigma: &[f64]) -> f64 {
    let mut model = mat_vec(&view.sub_matrix, &sigma[view.coeff_range.clone()]);
    if let Some(bp) = &view.boundary_prev {
        model += mat_vec(bp, &sigma[view.prev_range()]);
    }
    if let Some(bn) = &view.boundary_next {
        model += mat_vec(bn, &sigma[view.next_range()]);
    }
    (DVector::from_column_slice(&view.y) - model).norm()
}

/// Measurement of a segment with the previous segment's estimated
/// contribution removed.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualMeasurement {
    pub y_virt: Vec<f64>,
    /// Global indices of the nonzeros that were subtracted.
    pub subtracted_support: Vec<usize>,
}

/// `prev_block` holds the previous estimate over [`SegmentView::prev_range`].
pub fn virtual_measurement(view: &SegmentView, prev_block: Option<&[f64]>) -> Result<VirtualMeasurement> {
    let Some(bp) = &view.boundary_prev else {
        return Ok(VirtualMeasurement { y_virt: view.y.clone(), subtracted_support: Vec::new() });
    };
    let prev = prev_block.ok_or(Error::MissingPreviousEstimate(view.index))?;
    if prev.len() != bp.ncols() {
        return Err(Error::DimensionMismatch { what: "previous estimate block", expected: bp.ncols(), actual: prev.len() });
    }
    let y = DVector::from_column_slice(&view.y) - mat_vec(bp, prev);
    let offset = view.prev_range().start;
    let subtracted_support = prev.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| offset + i).collect();
    Ok(VirtualMeasurement { y_virt: y.as_slice().to_vec(), subtracted_support })
}

/// Interference in the virtual measurement, split by origin. Requires the
/// ground truth and is only available in simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualNoise {
    pub n_virt: Vec<f64>,
    /// Leakage of the previous segment's estimation error.
    pub forward_part: Vec<f64>,
    /// Leakage of the block after the window.
    pub backward_part: Vec<f64>,
}

/// `prev_block` as in [`virtual_measurement`]; `None` counts as a zero estimate.
pub fn oracle_virtual_noise(view: &SegmentView, sigma: &[f64], prev_block: Option<&[f64]>) -> VirtualNoise {
    let rows = view.rows();
    let forward = match &view.boundary_prev {
        Some(bp) => {
            let truth = &sigma[view.prev_range()];
            let err: Vec<f64> = match prev_block {
                Some(est) => truth.iter().zip(est).map(|(t, e)| t - e).collect(),
                None => truth.to_vec(),
            };
            mat_vec(bp, &err)
        }
        None => DVector::zeros(rows),
    };
    let backward = match &view.boundary_next {
        Some(bn) => mat_vec(bn, &sigma[view.next_range()]),
        None => DVector::zeros(rows),
    };
    VirtualNoise {
        n_virt: (&forward + &backward).as_slice().to_vec(),
        forward_part: forward.as_slice().to_vec(),
        backward_part: backward.as_slice().to_vec(),
    }
}
