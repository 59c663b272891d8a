//! Pulsed-radar echo model: system parameters, the LFM transmit pulse, sparse
//! target scenes, Nyquist-rate synthesis and additive receiver noise.
//!
//! Time is measured internally in Nyquist intervals (`tau0 = 1/B`), so the
//! dictionary atom `n` is the pulse delayed by `n` samples and every integral
//! of the analog model becomes a plain sum over chips.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const INTEGRAL_TOL: f64 = 1e-6;

fn integral(value: f64, what: &str) -> Result<usize> {
    let rounded = value.round();
    if !value.is_finite() || rounded < 1.0 || (value - rounded).abs() > INTEGRAL_TOL * rounded.max(1.0) {
        return Err(Error::NonIntegralDimensions(format!("{what} = {value} is not a positive integer")));
    }
    Ok(rounded as usize)
}

/// Scalar system parameters and the dimensions derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub bandwidth_hz: f64,
    pub pulse_width_s: f64,
    pub receive_time_s: f64,
    /// Integration length in Nyquist intervals (`R`).
    pub downsample_ratio: usize,
    /// Segment length in pulse widths (`S`).
    pub segment_pulses: usize,
    /// Slide between consecutive segments in pulse widths (`W`).
    pub slide_pulses: usize,
    pub chip_rate_hz: f64,
    /// Nyquist samples per pulse width (`Np`).
    pub np: usize,
    /// Compressive samples per pulse width (`Mp`).
    pub mp: usize,
    /// Receive time in pulse widths (`P`).
    pub pulses: usize,
    /// Coefficient vector length, `(P - 1) * Np`.
    pub n: usize,
    /// Measurement vector length, `P * Mp`.
    pub m: usize,
}

impl RadarConfig {
    /// Validates the physical parameters and derives all dimensions.
    pub fn new(
        bandwidth_hz: f64,
        pulse_width_s: f64,
        receive_time_s: f64,
        downsample_ratio: usize,
        segment_pulses: usize,
        slide_pulses: usize,
    ) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && pulse_width_s > 0.0 && receive_time_s > 0.0) {
            return Err(Error::InvalidParameter("B, Tp and T must be positive".into()));
        }
        if downsample_ratio < 2 {
            return Err(Error::InvalidParameter(format!("downsample ratio R={downsample_ratio} must be an integer > 1")));
        }
        let np = integral(pulse_width_s * bandwidth_hz, "Tp*B")?;
        let pulses = integral(receive_time_s / pulse_width_s, "T/Tp")?;
        if np % downsample_ratio != 0 {
            return Err(Error::NonIntegralDimensions(format!("Np = {np} is not divisible by R = {downsample_ratio}")));
        }
        if segment_pulses < 2 || segment_pulses >= pulses {
            return Err(Error::InvalidSegmentLength { segment: segment_pulses, pulses });
        }
        if slide_pulses < 1 || slide_pulses >= segment_pulses {
            return Err(Error::InvalidSlide { slide: slide_pulses, segment: segment_pulses });
        }
        let mp = np / downsample_ratio;
        Ok(Self {
            bandwidth_hz,
            pulse_width_s,
            receive_time_s,
            downsample_ratio,
            segment_pulses,
            slide_pulses,
            chip_rate_hz: bandwidth_hz,
            np,
            mp,
            pulses,
            n: (pulses - 1) * np,
            m: pulses * mp,
        })
    }

    /// Builds a configuration from sample counts at the given bandwidth.
    pub fn from_counts(bandwidth_hz: f64, np: usize, r: usize, pulses: usize, s: usize, w: usize) -> Result<Self> {
        let tp = np as f64 / bandwidth_hz;
        Self::new(bandwidth_hz, tp, tp * pulses as f64, r, s, w)
    }

    /// Same system with a different segment length and slide.
    pub fn with_segmentation(&self, segment_pulses: usize, slide_pulses: usize) -> Result<Self> {
        Self::new(self.bandwidth_hz, self.pulse_width_s, self.receive_time_s, self.downsample_ratio, segment_pulses, slide_pulses)
    }

    pub fn nyquist_interval_s(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    pub fn integration_time_s(&self) -> f64 {
        self.downsample_ratio as f64 / self.bandwidth_hz
    }

    /// Length of the synthesized Nyquist grid, `P * Np`.
    pub fn nyquist_len(&self) -> usize {
        self.pulses * self.np
    }

    /// Coefficients per segment, `S * Np`.
    pub fn segment_coeffs(&self) -> usize {
        self.segment_pulses * self.np
    }

    /// Measurements per segment, `(S + 1) * Mp`.
    pub fn segment_measurements(&self) -> usize {
        (self.segment_pulses + 1) * self.mp
    }

    /// Number of segments. Reduces to `P - S` for a unit slide.
    pub fn segment_count(&self) -> usize {
        let span = self.pulses - 1 - self.segment_pulses;
        span.div_ceil(self.slide_pulses) + 1
    }

    /// First pulse block covered by segment `l` (1-based). The final segment is
    /// clamped so that it ends exactly at `N`.
    pub fn segment_start_block(&self, l: usize) -> usize {
        ((l - 1) * self.slide_pulses).min(self.pulses - 1 - self.segment_pulses)
    }
}

/// Samples of the transmit pulse on the Nyquist grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    /// Chirp rate in Hz/s; informational.
    pub chirp_rate: f64,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { samples: self.samples.iter().map(|s| s * factor).collect(), chirp_rate: self.chirp_rate }
    }

    /// Rescaled to unit energy, so that RD columns have unit expected norm.
    pub fn unit_energy(&self) -> Self {
        let e = self.energy();
        if e > 0.0 {
            self.scaled(1.0 / e.sqrt())
        } else {
            self.clone()
        }
    }
}

/// LFM pulse `cos(gamma*pi*(t - Tp/2)^2)` sampled at `t = j*tau0`, `j = 0..Np`.
pub fn lfm_waveform(config: &RadarConfig) -> Waveform {
    lfm_waveform_with_rate(config, config.bandwidth_hz / config.pulse_width_s)
}

/// LFM pulse with an explicit chirp rate; a zero rate gives the constant pulse.
pub fn lfm_waveform_with_rate(config: &RadarConfig, chirp_rate: f64) -> Waveform {
    let tau0 = config.nyquist_interval_s();
    let half = config.pulse_width_s / 2.0;
    let samples = (0..config.np)
        .map(|j| {
            let t = j as f64 * tau0 - half;
            (chirp_rate * std::f64::consts::PI * t * t).cos()
        })
        .collect();
    Waveform { samples, chirp_rate }
}

/// All-ones test pulse.
pub fn constant_waveform(config: &RadarConfig) -> Waveform {
    Waveform { samples: vec![1.0; config.np], chirp_rate: 0.0 }
}

/// Sparse coefficient vector of a target scene.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetScene {
    pub coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub bernoulli_p: Option<f64>,
}

impl TargetScene {
    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        let support = coefficients.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        Self { coefficients, support, bernoulli_p: None }
    }

    /// Scene of length `n` with the given `(index, amplitude)` targets.
    pub fn from_targets(n: usize, targets: &[(usize, f64)]) -> Self {
        let mut c = vec![0.0; n];
        for &(i, a) in targets {
            c[i] = a;
        }
        Self::from_coefficients(c)
    }

    pub fn empty(n: usize) -> Self {
        Self::from_coefficients(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }
}

/// Bernoulli(p) support with Uniform(0, 1] amplitudes.
pub fn random_scene(config: &RadarConfig, p: f64, seed: u64) -> Result<TargetScene> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("occupancy probability p={p} outside [0, 1]")));
    }
    let mut rng = rng_from_seed(seed);
    let coefficients = (0..config.n)
        .map(|_| {
            let hit = rng.random::<f64>() < p;
            // 1 - U[0,1) lies in (0, 1]
            let amp = 1.0 - rng.random::<f64>();
            if hit {
                amp
            } else {
                0.0
            }
        })
        .collect();
    let mut scene = TargetScene::from_coefficients(coefficients);
    scene.bernoulli_p = Some(p);
    Ok(scene)
}

/// Nyquist samples `x[k] = sum_n sigma[n] * s[k - n]` over the full grid of
/// `P * Np` points.
pub fn synthesize_nyquist(scene: &TargetScene, waveform: &Waveform, config: &RadarConfig) -> Vec<f64> {
    synthesize_coefficients(&scene.coefficients, waveform, config.nyquist_len())
}

/// Same as [`synthesize_nyquist`] for a bare coefficient slice.
pub fn synthesize_coefficients(coefficients: &[f64], waveform: &Waveform, len: usize) -> Vec<f64> {
    let mut x = vec![0.0; len];
    for (n, &a) in coefficients.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (j, &s) in waveform.samples.iter().enumerate() {
            if let Some(v) = x.get_mut(n + j) {
                *v += a * s;
            }
        }
    }
    x
}

/// Receiver noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseLevel {
    /// One-sided density `N0`; the two-sided PSD is `N0/2`.
    Psd { n0: f64 },
    /// Target input SNR in dB relative to the clean signal power.
    Isnr { db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: NoiseLevel,
    pub seed: u64,
}

/// A noisy Nyquist-rate signal with its noise bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySignal {
    pub samples: Vec<f64>,
    /// Per-sample noise variance `N0*B/2`.
    pub variance: f64,
    /// Realized input SNR (linear); infinite when noiseless.
    pub isnr: f64,
}

pub fn signal_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Adds i.i.d. Gaussian noise of variance `N0*B/2` per Nyquist sample.
pub fn add_noise(x: &[f64], spec: &NoiseSpec, config: &RadarConfig) -> Result<NoisySignal> {
    let power = signal_power(x);
    let variance = match spec.level {
        NoiseLevel::Psd { n0 } => {
            if n0.is_nan() || n0 < 0.0 {
                return Err(Error::InvalidParameter(format!("N0={n0} must be non-negative")));
            }
            n0 * config.bandwidth_hz / 2.0
        }
        NoiseLevel::Isnr { db } => {
            if !db.is_finite() {
                return Err(Error::InvalidParameter(format!("ISNR {db} dB is not finite")));
            }
            power / 10f64.powf(db / 10.0)
        }
    };
    if variance == 0.0 {
        return Ok(NoisySignal { samples: x.to_vec(), variance, isnr: f64::INFINITY });
    }
    let sd = variance.sqrt();
    let mut rng = rng_from_seed(spec.seed);
    let samples = x
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sd * z
        })
        .collect();
    Ok(NoisySignal { samples, variance, isnr: power / variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> RadarConfig {
        RadarConfig::new(10e6, 0.9e-6, 5.4e-6, 3, 3, 1).unwrap()
    }

    #[test]
    fn toy_dimensions() {
        let c = toy();
        assert_eq!((c.np, c.mp, c.pulses, c.n, c.m, c.segment_count()), (9, 3, 6, 45, 18, 3));
    }

    #[test]
    fn simulation_profile_dimensions() {
        let c = RadarConfig::new(100e6, 10e-6, 100e-6, 5, 3, 1).unwrap();
        assert_eq!((c.np, c.mp, c.pulses, c.n, c.m, c.segment_count()), (1000, 200, 10, 9000, 2000, 7));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(RadarConfig::new(10e6, 1e-6, 5e-6, 2, 5, 1), Err(Error::InvalidSegmentLength { segment: 5, pulses: 5 })));
        assert!(matches!(RadarConfig::new(10e6, 1e-6, 5e-6, 2, 3, 3), Err(Error::InvalidSlide { .. })));
        assert!(matches!(RadarConfig::new(10e6, 1e-6, 5e-6, 3, 3, 1), Err(Error::NonIntegralDimensions(_))));
        assert!(matches!(RadarConfig::new(10e6, 1.05e-6, 5e-6, 2, 3, 1), Err(Error::NonIntegralDimensions(_))));
        assert!(matches!(RadarConfig::new(10e6, 1e-6, 5.5e-6, 2, 3, 1), Err(Error::NonIntegralDimensions(_))));
    }

    #[test]
    fn segment_count_with_slide() {
        // P=10, S=4: starts 0..=5 for W=1; W=2 starts 0,2,4 then clamps to 5.
        let c = RadarConfig::from_counts(1.0, 10, 5, 10, 4, 1).unwrap();
        assert_eq!(c.segment_count(), 6);
        let c2 = c.with_segmentation(4, 2).unwrap();
        assert_eq!(c2.segment_count(), 4);
        assert_eq!((1..=4).map(|l| c2.segment_start_block(l)).collect::<Vec<_>>(), vec![0, 2, 4, 5]);
        let c3 = c.with_segmentation(4, 3).unwrap();
        assert_eq!((1..=c3.segment_count()).map(|l| c3.segment_start_block(l)).collect::<Vec<_>>(), vec![0, 3, 5]);
    }

    #[test]
    fn lfm_center_and_start() {
        let c = RadarConfig::new(100e6, 10e-6, 100e-6, 5, 3, 1).unwrap();
        let w = lfm_waveform(&c);
        assert_relative_eq!(w.samples[500], 1.0, epsilon = 1e-12);
        // gamma*pi*(Tp/2)^2 = 250*pi
        assert_relative_eq!(w.samples[0], 1.0, epsilon = 1e-9);
        assert!(w.samples.iter().all(|s| (-1.0..=1.0).contains(s)));
        let flat = lfm_waveform_with_rate(&c, 0.0);
        assert!(flat.samples.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn scene_extremes() {
        let c = toy();
        let empty = random_scene(&c, 0.0, 1).unwrap();
        assert!(empty.support.is_empty());
        assert!(empty.coefficients.iter().all(|&v| v == 0.0));
        let full = random_scene(&c, 1.0, 1).unwrap();
        assert_eq!(full.sparsity(), c.n);
        assert!(full.coefficients.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert_eq!(random_scene(&c, 0.3, 9).unwrap(), random_scene(&c, 0.3, 9).unwrap());
        assert!(random_scene(&c, 1.5, 1).is_err());
    }

    #[test]
    fn bernoulli_support_statistics() {
        let c = RadarConfig::new(100e6, 10e-6, 100e-6, 5, 3, 1).unwrap();
        let trials = 500;
        let total: usize = (0..trials).map(|t| random_scene(&c, 0.01, t).unwrap().sparsity()).sum();
        let mean = total as f64 / trials as f64;
        let sd = (9000.0f64 * 0.01 * 0.99).sqrt();
        // standard error of the mean over 500 trials, 3-sigma band
        assert!((mean - 90.0).abs() < 3.0 * sd / (trials as f64).sqrt(), "mean {mean}");
        assert!((mean - 90.0).abs() < 3.0 * sd);
    }

    #[test]
    fn synthesis_cases() {
        let c = toy();
        let w = lfm_waveform(&c);
        let x = synthesize_nyquist(&TargetScene::from_targets(c.n, &[(0, 1.0)]), &w, &c);
        assert_eq!(x.len(), 54);
        assert_eq!(&x[..9], &w.samples[..]);
        assert!(x[9..].iter().all(|&v| v == 0.0));
        assert!(synthesize_nyquist(&TargetScene::empty(c.n), &w, &c).iter().all(|&v| v == 0.0));
        let two = synthesize_nyquist(&TargetScene::from_targets(c.n, &[(0, 1.0), (9, 1.0)]), &w, &c);
        assert_eq!(two[8], w.samples[8]);
        assert_eq!(two[9], w.samples[0]);
        // last admissible delay is fully contained
        let last = synthesize_nyquist(&TargetScene::from_targets(c.n, &[(c.n - 1, 2.0)]), &w, &c);
        assert_eq!(last[c.n + 7], 2.0 * w.samples[8]);
        assert_eq!(last[c.nyquist_len() - 1], 0.0);
    }

    #[test]
    fn noiseless_is_identity() {
        let c = toy();
        let x: Vec<f64> = (0..54).map(|i| i as f64).collect();
        let out = add_noise(&x, &NoiseSpec { level: NoiseLevel::Psd { n0: 0.0 }, seed: 3 }, &c).unwrap();
        assert_eq!(out.samples, x);
        assert!(out.isnr.is_infinite());
    }

    #[test]
    fn noise_variance_matches_psd() {
        let c = RadarConfig::from_counts(2.0, 4, 2, 3, 2, 1).unwrap();
        // N0 * B / 2 = 1
        let x = vec![0.0; 100_000];
        let out = add_noise(&x, &NoiseSpec { level: NoiseLevel::Psd { n0: 1.0 }, seed: 11 }, &c).unwrap();
        assert_eq!(out.variance, 1.0);
        let var = out.samples.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((0.97..=1.03).contains(&var), "variance {var}");
    }

    #[test]
    fn isnr_sets_variance() {
        let c = toy();
        let x: Vec<f64> = (0..54).map(|i| (i as f64 * 0.3).sin()).collect();
        let out = add_noise(&x, &NoiseSpec { level: NoiseLevel::Isnr { db: 10.0 }, seed: 5 }, &c).unwrap();
        assert_relative_eq!(out.variance, signal_power(&x) / 10.0, max_relative = 1e-12);
        assert_relative_eq!(out.isnr, 10.0, max_relative = 1e-12);
    }
}
