//! Small test problems with controlled restricted-isometry behaviour.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::rip::rip_bruteforce;
use crate::error::{Error, Result};
use crate::radar::{lfm_waveform, RadarConfig, Waveform};
use crate::rng::rng_from_seed;
use crate::sampler::{build_measurement_matrix, make_chipping, ChippingSequence, MeasurementMatrix};

/// Paley construction of a Hadamard matrix of order `q + 1` for a prime
/// `q = 3 (mod 4)`.
pub fn paley_hadamard(q: usize) -> DMatrix<f64> {
    assert!(q % 4 == 3 && (2..q).all(|d| !q.is_multiple_of(d)), "q must be a prime = 3 mod 4");
    let residues: Vec<bool> = {
        let mut r = vec![false; q];
        for x in 1..q {
            r[x * x % q] = true;
        }
        r
    };
    let chi = |d: usize| -> f64 {
        if d == 0 {
            0.0
        } else if residues[d] {
            1.0
        } else {
            -1.0
        }
    };
    let n = q + 1;
    let mut s = DMatrix::zeros(n, n);
    for j in 1..n {
        s[(0, j)] = 1.0;
        s[(j, 0)] = -1.0;
    }
    for i in 0..q {
        for j in 0..q {
            s[(i + 1, j + 1)] = chi((j + q - i) % q);
        }
    }
    DMatrix::identity(n, n) + s
}

/// `12 x cols` frame (`12 < cols <= 24`): the identity followed by scaled
/// Hadamard columns, rotated by a random orthogonal matrix, perturbed by
/// `jitter`-sized Gaussian noise, column-normalized, shuffled and sign-flipped.
/// Pairs of columns have coherence at most about `1/sqrt(12)`.
pub fn hadamard_frame(cols: usize, jitter: f64, seed: u64) -> DMatrix<f64> {
    assert!(cols > 12 && cols <= 24);
    let mut rng = rng_from_seed(seed);
    let h = paley_hadamard(11) / 12f64.sqrt();
    let mut frame = DMatrix::zeros(12, cols);
    frame.view_mut((0, 0), (12, 12)).fill_with_identity();
    frame.view_mut((0, 12), (12, cols - 12)).copy_from(&h.columns(0, cols - 12));
    let g = DMatrix::from_fn(12, 12, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let mut a = q * frame;
    a += DMatrix::from_fn(12, cols, |_, _| jitter * rng.sample::<f64, _>(StandardNormal));
    let mut order: Vec<usize> = (0..cols).collect();
    order.shuffle(&mut rng);
    let mut out = DMatrix::zeros(12, cols);
    for (dst, &src) in order.iter().enumerate() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let c = a.column(src).normalize() * sign;
        out.set_column(dst, &c);
    }
    out
}

/// Exact `delta_3` of an unjittered 20-column frame is `sqrt(1/6)`, so a
/// jitter above about `5e-4` rarely stays under `1/(sqrt(2)+1)`.
pub const FRAME_JITTER: f64 = 5e-4;

/// Draws frames until the exact `delta_{k+1}` is below `1/(sqrt(k)+1)`;
/// returns the frame and its constant.
pub fn favorable_frame(cols: usize, k: usize, jitter: f64, seed: u64) -> Result<(DMatrix<f64>, f64)> {
    const ATTEMPTS: u64 = 64;
    let limit = 1.0 / ((k as f64).sqrt() + 1.0);
    let mut last = f64::NAN;
    for attempt in 0..ATTEMPTS {
        let a = hadamard_frame(cols, jitter, seed.wrapping_mul(1_000_003).wrapping_add(attempt));
        last = rip_bruteforce(&a, k + 1)?.delta;
        if last < limit {
            return Ok((a, last));
        }
    }
    Err(Error::InvalidParameter(format!("no favorable frame in {ATTEMPTS} draws (last delta {last:.4})")))
}

/// A complete simulated measurement setup.
#[derive(Debug, Clone)]
pub struct RdProblem {
    pub config: RadarConfig,
    pub waveform: Waveform,
    pub chipping: ChippingSequence,
    pub matrix: MeasurementMatrix,
}

/// Builds the problem for `config`; with `unit_energy` the pulse is scaled
/// to unit energy so that columns have unit expected norm.
pub fn rd_problem(config: &RadarConfig, chip_seed: u64, unit_energy: bool) -> Result<RdProblem> {
    let lfm = lfm_waveform(config);
    let waveform = if unit_energy { lfm.unit_energy() } else { lfm };
    let chipping = make_chipping(config, chip_seed);
    let matrix = build_measurement_matrix(config, &waveform, &chipping)?;
    Ok(RdProblem { config: config.clone(), waveform, chipping, matrix })
}
