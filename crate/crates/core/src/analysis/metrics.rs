//! Reconstruction quality metrics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radar::{synthesize_coefficients, Waveform};

/// RSNR reported for exact reconstructions (zero error energy).
pub const RSNR_CAP_DB: f64 = 300.0;

fn norm_sq(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(|x| x * x).sum()
}

fn check_len(truth: &[f64], est: &[f64]) -> Result<()> {
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch { what: "estimate", expected: truth.len(), actual: est.len() });
    }
    Ok(())
}

/// `||est - truth||_2 / ||truth||_2`.
pub fn relative_error(truth: &[f64], est: &[f64]) -> Result<f64> {
    check_len(truth, est)?;
    let t = norm_sq(truth.iter().copied());
    if t == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((norm_sq(truth.iter().zip(est).map(|(a, b)| b - a)) / t).sqrt())
}

/// Fraction of the true support that the estimate declares nonzero; `None`
/// for an empty true support.
pub fn correct_discovery_rate(truth: &[f64], est: &[f64]) -> Result<Option<f64>> {
    check_len(truth, est)?;
    let support = truth.iter().filter(|v| **v != 0.0).count();
    if support == 0 {
        return Ok(None);
    }
    let hits = truth.iter().zip(est).filter(|(t, e)| **t != 0.0 && **e != 0.0).count();
    Ok(Some(hits as f64 / support as f64))
}

/// Energies of the synthesized echo and of the synthesized error; the
/// harness averages the error energy across trials before forming a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RsnrParts {
    pub signal_energy: f64,
    pub error_energy: f64,
}

impl RsnrParts {
    pub fn db(&self) -> Result<f64> {
        ratio_db(self.signal_energy, self.error_energy)
    }
}

pub fn rsnr_parts(truth: &[f64], est: &[f64], waveform: &Waveform, nyquist_len: usize) -> Result<RsnrParts> {
    check_len(truth, est)?;
    let err: Vec<f64> = truth.iter().zip(est).map(|(t, e)| e - t).collect();
    let signal_energy = norm_sq(synthesize_coefficients(truth, waveform, nyquist_len));
    let error_energy = norm_sq(synthesize_coefficients(&err, waveform, nyquist_len));
    Ok(RsnrParts { signal_energy, error_energy })
}

/// `10 log10(num / den)` capped at [`RSNR_CAP_DB`] when `den == 0`.
pub fn ratio_db(num: f64, den: f64) -> Result<f64> {
    if num == 0.0 {
        return Err(Error::ZeroReference);
    }
    if den == 0.0 {
        return Ok(RSNR_CAP_DB);
    }
    Ok((10.0 * (num / den).log10()).min(RSNR_CAP_DB))
}

/// Per-trial ingredients of the signal-to-virtual-noise ratios of one
/// segment: clean in-window energy and energies of the total, forward and
/// backward virtual noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SvnrParts {
    pub signal_energy: f64,
    pub total_noise: f64,
    pub forward_noise: f64,
    pub backward_noise: f64,
}

/// Ratios of means across trials, in dB: `(SVNR_o, SVNR_a, SVNR_b)`.
pub fn svnr_db(parts: &[SvnrParts]) -> Result<(f64, f64, f64)> {
    let n = parts.len() as f64;
    if parts.is_empty() {
        return Err(Error::ZeroReference);
    }
    let mean = |f: fn(&SvnrParts) -> f64| parts.iter().map(f).sum::<f64>() / n;
    let s = mean(|p| p.signal_energy);
    Ok((ratio_db(s, mean(|p| p.total_noise))?, ratio_db(s, mean(|p| p.forward_noise))?, ratio_db(s, mean(|p| p.backward_noise))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub relative_error: Option<f64>,
    pub cdr: Option<f64>,
    pub rsnr: RsnrParts,
    pub support_size: usize,
    pub estimated_support_size: usize,
}

/// All per-trial metrics for a full-range estimate.
pub fn metrics(truth: &[f64], est: &[f64], waveform: &Waveform, nyquist_len: usize) -> Result<MetricsReport> {
    let relative_error = match relative_error(truth, est) {
        Ok(v) => Some(v),
        Err(Error::ZeroReference) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        relative_error,
        cdr: correct_discovery_rate(truth, est)?,
        rsnr: rsnr_parts(truth, est, waveform, nyquist_len)?,
        support_size: truth.iter().filter(|v| **v != 0.0).count(),
        estimated_support_size: est.iter().filter(|v| **v != 0.0).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wf() -> Waveform {
        Waveform { samples: vec![1.0, -0.5, 0.25], chirp_rate: 0.0 }
    }

    #[test]
    fn exact_estimate() {
        let t = [0.0, 2.0, 0.0, -1.0];
        let m = metrics(&t, &t, &wf(), 6).unwrap();
        assert_eq!(m.relative_error, Some(0.0));
        assert_eq!(m.cdr, Some(1.0));
        assert_eq!(m.rsnr.db().unwrap(), RSNR_CAP_DB);
    }

    #[test]
    fn zero_estimate() {
        let t = [0.0, 2.0, 0.0, -1.0];
        let m = metrics(&t, &[0.0; 4], &wf(), 6).unwrap();
        assert_eq!(m.relative_error, Some(1.0));
        assert_eq!(m.cdr, Some(0.0));
        assert_relative_eq!(m.rsnr.db().unwrap(), 0.0);
    }

    #[test]
    fn hand_instance() {
        let t = [3.0, 4.0, 0.0];
        let e = [3.0, 0.0, 0.0];
        assert_relative_eq!(relative_error(&t, &e).unwrap(), 0.8);
        assert_eq!(correct_discovery_rate(&t, &e).unwrap(), Some(0.5));
    }

    #[test]
    fn empty_truth() {
        assert_eq!(relative_error(&[0.0; 3], &[1.0, 0.0, 0.0]), Err(Error::ZeroReference));
        assert_eq!(correct_discovery_rate(&[0.0; 3], &[1.0, 0.0, 0.0]).unwrap(), None);
        let m = metrics(&[0.0; 3], &[0.0; 3], &wf(), 5).unwrap();
        assert!(m.relative_error.is_none() && m.cdr.is_none());
    }

    #[test]
    fn rsnr_uses_synthesized_energy() {
        // one coefficient of amplitude 2 -> echo energy 4 * (1 + 0.25 + 0.0625)
        let p = rsnr_parts(&[2.0, 0.0], &[1.0, 0.0], &wf(), 4).unwrap();
        assert_relative_eq!(p.signal_energy, 4.0 * 1.3125);
        assert_relative_eq!(p.error_energy, 1.3125);
        assert_relative_eq!(p.db().unwrap(), 10.0 * 4f64.log10());
    }

    #[test]
    fn svnr_ratio_of_means() {
        let parts = [
            SvnrParts { signal_energy: 10.0, total_noise: 2.0, forward_noise: 0.5, backward_noise: 1.5 },
            SvnrParts { signal_energy: 30.0, total_noise: 0.0, forward_noise: 0.0, backward_noise: 0.0 },
        ];
        let (o, a, b) = svnr_db(&parts).unwrap();
        assert_relative_eq!(o, 10.0 * (20.0f64).log10());
        assert_relative_eq!(a, 10.0 * (80.0f64).log10());
        assert_relative_eq!(b, 10.0 * (20.0f64 / 0.75).log10());
    }
}
