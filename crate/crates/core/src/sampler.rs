//! Random-demodulator acquisition: a ±1 chipping sequence at the Nyquist rate,
//! an ideal integrate-and-dump over `R` chips, and the banded measurement
//! matrix obtained by passing every dictionary atom through the same chain.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::radar::{NoisySignal, RadarConfig, Waveform};
use crate::rng::rng_from_seed;

pub mod io;

/// Rademacher mixing sequence, one chip per Nyquist interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ChippingSequence {
    pub chips: Vec<f64>,
    pub seed: Option<u64>,
}

impl ChippingSequence {
    /// Every chip `+1`.
    pub fn constant(len: usize) -> Self {
        Self { chips: vec![1.0; len], seed: None }
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }
}

pub fn make_chipping(config: &RadarConfig, seed: u64) -> ChippingSequence {
    let mut rng = rng_from_seed(seed);
    let chips = (0..config.nyquist_len()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    ChippingSequence { chips, seed: Some(seed) }
}

/// Rows `first..=last` that may hold nonzeros in one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub first_row: usize,
    pub last_row: usize,
}

impl Band {
    pub fn contains(&self, row: usize) -> bool {
        (self.first_row..=self.last_row).contains(&row)
    }

    pub fn height(&self) -> usize {
        self.last_row - self.first_row + 1
    }
}

/// Band of column `n`: the integration windows `[mR, (m+1)R)` that overlap the
/// delayed pulse `[n, n + Np)`.
pub fn column_band(n: usize, np: usize, r: usize) -> Band {
    Band { first_row: n / r, last_row: (n + np - 1) / r }
}

/// Dense `M x N` measurement matrix with recorded per-column bands.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub entries: DMatrix<f64>,
    pub bands: Vec<Band>,
}

impl MeasurementMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn mul_vec(&self, sigma: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(sigma);
        (&self.entries * v).as_slice().to_vec()
    }

    /// Copy with every column scaled to unit norm; zero columns are left as is.
    pub fn column_normalized(&self) -> Self {
        let mut entries = self.entries.clone();
        for mut col in entries.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        Self { entries, bands: self.bands.clone() }
    }
}

/// `A[m][n] = sum_{k = mR}^{(m+1)R - 1} chips[k] * s[k - n]`.
pub fn build_measurement_matrix(config: &RadarConfig, waveform: &Waveform, chipping: &ChippingSequence) -> Result<MeasurementMatrix> {
    if chipping.len() < config.nyquist_len() {
        return Err(Error::DimensionMismatch { what: "chipping sequence length", expected: config.nyquist_len(), actual: chipping.len() });
    }
    if waveform.len() != config.np {
        return Err(Error::DimensionMismatch { what: "waveform length", expected: config.np, actual: waveform.len() });
    }
    let (m_rows, n_cols, r, np) = (config.m, config.n, config.downsample_ratio, config.np);
    let bands: Vec<Band> = (0..n_cols).map(|n| column_band(n, np, r)).collect();
    let columns: Vec<Vec<f64>> = bands
        .par_iter()
        .enumerate()
        .map(|(n, band)| {
            let mut col = vec![0.0; m_rows];
            for (row, slot) in col.iter_mut().enumerate().take(band.last_row + 1).skip(band.first_row) {
                let lo = (row * r).max(n);
                let hi = ((row + 1) * r).min(n + np);
                *slot = (lo..hi).map(|k| chipping.chips[k] * waveform.samples[k - n]).sum();
            }
            col
        })
        .collect();
    let entries = DMatrix::from_fn(m_rows, n_cols, |i, j| columns[j][i]);
    Ok(MeasurementMatrix { entries, bands })
}

/// Compressive samples with noise bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub y: Vec<f64>,
    /// Per-Nyquist-sample noise variance that was added before sampling.
    pub noise_variance: f64,
    /// Realized input SNR (linear).
    pub isnr: f64,
    pub seed: Option<u64>,
}

/// `y[m] = sum_{k = mR}^{(m+1)R - 1} chips[k] * x[k]`.
pub fn rd_sample(signal: &[f64], chipping: &ChippingSequence, config: &RadarConfig) -> Result<Measurements> {
    let need = config.nyquist_len();
    if signal.len() < need {
        return Err(Error::DimensionMismatch { what: "Nyquist signal length", expected: need, actual: signal.len() });
    }
    if chipping.len() < need {
        return Err(Error::DimensionMismatch { what: "chipping sequence length", expected: need, actual: chipping.len() });
    }
    let r = config.downsample_ratio;
    let y = (0..config.m).map(|m| (m * r..(m + 1) * r).map(|k| chipping.chips[k] * signal[k]).sum()).collect();
    Ok(Measurements { y, noise_variance: 0.0, isnr: f64::INFINITY, seed: None })
}

/// Samples a noisy Nyquist signal, carrying its noise metadata along.
pub fn rd_sample_noisy(signal: &NoisySignal, chipping: &ChippingSequence, config: &RadarConfig) -> Result<Measurements> {
    let mut out = rd_sample(&signal.samples, chipping, config)?;
    out.noise_variance = signal.variance;
    out.isnr = signal.isnr;
    Ok(out)
}
