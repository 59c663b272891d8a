//! Monte-Carlo sweep over the grid of a config.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use segsr_core::analysis::metrics::{metrics, SvnrParts};
use segsr_core::analysis::resources::{resource_accounting, ResourceAccount};
use segsr_core::pipeline::{reconstruct, PipelineResult, SolverKind};
use segsr_core::radar::{
    add_noise, constant_waveform, lfm_waveform, random_scene, synthesize_nyquist, NoiseLevel, NoiseSpec, RadarConfig, TargetScene, Waveform,
};
use segsr_core::rng::{derive_seed, Stream};
use segsr_core::sampler::{build_measurement_matrix, make_chipping, rd_sample_noisy, MeasurementMatrix};
use segsr_core::segment::{oracle_virtual_noise, segment_view};
use segsr_core::solvers::SolverParams;

use crate::config::{Cell, ExperimentConfig, NoiseCell, PulseShape};
use crate::error::{CliError, CliResult};

/// Seeds of one trial. Scenes depend on `(p, trial)` only and chipping on
/// `trial` only, so every solver, segment length, slide and noise level sees
/// the same targets and the same sampler in a given trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialSeeds {
    pub scene: u64,
    pub chipping: u64,
    pub noise: u64,
}

pub fn trial_seeds(master: u64, cell: &Cell, trial: usize) -> TrialSeeds {
    let p_key = cell.p.map_or(u64::MAX, f64::to_bits);
    let t = trial as u64;
    TrialSeeds {
        scene: derive_seed(master, Stream::Scene, &[p_key, t]),
        chipping: derive_seed(master, Stream::Chipping, &[t]),
        noise: derive_seed(master, Stream::Noise, &[p_key, cell.noise.seed_key(), t]),
    }
}

/// Per-trial, per-solver outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub cell: Cell,
    pub trial: usize,
    pub solver: SolverKind,
    pub sparsity: usize,
    pub estimated_sparsity: usize,
    /// Absent for an empty scene.
    pub relative_error: Option<f64>,
    pub cdr: Option<f64>,
    pub rsnr_signal: f64,
    pub rsnr_error: f64,
    /// Realized input SNR in dB; absent when noiseless.
    pub isnr_db: Option<f64>,
    /// Virtual-noise energies of the probe segment (segmented solvers).
    pub svnr: Option<SvnrParts>,
    pub failed_segments: usize,
}

/// `||estimate - truth||_2` over block `s` of the probe segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRow {
    pub cell: Cell,
    pub trial: usize,
    pub solver: SolverKind,
    pub segment: usize,
    pub s: usize,
    pub error_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub cell: Cell,
    pub trial: usize,
    pub solver: SolverKind,
    pub seconds: f64,
}

/// Virtual noise of the probe segment in one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VirtualNoiseSeries {
    pub cell: Cell,
    pub trial: usize,
    pub solver: SolverKind,
    pub segment: usize,
    pub total: Vec<f64>,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub trials: Vec<TrialRow>,
    pub blocks: Vec<BlockRow>,
    pub timings: Vec<TimingRow>,
    /// Trial 0 of every cell, per segmented solver.
    pub virtual_noise: Vec<VirtualNoiseSeries>,
    /// One entry per segment length in the sweep.
    pub resources: Vec<ResourceAccount>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Default)]
struct TrialOutput {
    rows: Vec<TrialRow>,
    blocks: Vec<BlockRow>,
    timings: Vec<TimingRow>,
    noise: Vec<VirtualNoiseSeries>,
}

/// Draws the scene, sampler and noise of one trial.
pub struct TrialData {
    pub config: RadarConfig,
    pub waveform: Waveform,
    pub matrix: MeasurementMatrix,
    pub scene: TargetScene,
    pub y: Vec<f64>,
    pub noise_variance: f64,
    pub isnr: f64,
}

pub fn make_waveform(cfg: &ExperimentConfig, radar: &RadarConfig) -> Waveform {
    let w = match cfg.radar.pulse {
        PulseShape::Lfm => lfm_waveform(radar),
        PulseShape::Constant => constant_waveform(radar),
    };
    if cfg.radar.unit_energy {
        w.unit_energy()
    } else {
        w
    }
}

pub fn trial_data(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> CliResult<TrialData> {
    let config = cfg.radar_config(cell.segment_pulses, cell.slide_pulses)?;
    let seeds = trial_seeds(cfg.seed, cell, trial);
    let waveform = make_waveform(cfg, &config);
    let chipping = make_chipping(&config, seeds.chipping);
    let matrix = build_measurement_matrix(&config, &waveform, &chipping)?;
    let scene = match (&cfg.scene.targets, cell.p) {
        (Some(t), _) => TargetScene::from_targets(config.n, t),
        (None, Some(p)) => random_scene(&config, p, seeds.scene)?,
        (None, None) => return Err(CliError::invalid("scene", "cell has neither p nor targets")),
    };
    let x = synthesize_nyquist(&scene, &waveform, &config);
    let level = match cell.noise {
        NoiseCell::Noiseless => NoiseLevel::Psd { n0: 0.0 },
        NoiseCell::Isnr(db) => NoiseLevel::Isnr { db },
        NoiseCell::N0(n0) => NoiseLevel::Psd { n0 },
    };
    let noisy = if scene.sparsity() == 0 && matches!(level, NoiseLevel::Isnr { .. }) {
        // an input SNR is undefined for a silent scene
        add_noise(&x, &NoiseSpec { level: NoiseLevel::Psd { n0: 0.0 }, seed: seeds.noise }, &config)?
    } else {
        add_noise(&x, &NoiseSpec { level, seed: seeds.noise }, &config)?
    };
    let meas = rd_sample_noisy(&noisy, &chipping, &config)?;
    Ok(TrialData { config, waveform, matrix, scene, y: meas.y, noise_variance: meas.noise_variance, isnr: meas.isnr })
}

/// Stopping rule of the direct solve: the expected norm of the measurement
/// noise (each sample integrates `R` noisy Nyquist samples), or exhaustion
/// when noiseless.
pub fn baseline_params(data: &TrialData, base: &SolverParams) -> SolverParams {
    let c = &data.config;
    let tol = (c.m as f64 * c.downsample_ratio as f64 * data.noise_variance).sqrt();
    SolverParams { residual_tol: tol, ..*base }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn probe(data: &TrialData, result: &PipelineResult, segment: usize) -> CliResult<(SvnrParts, Vec<f64>, segsr_core::segment::VirtualNoise)> {
    let c = &data.config;
    let view = segment_view(&data.matrix, &data.y, c, segment)?;
    let sigma = &data.scene.coefficients;
    let prev = (segment > 1).then(|| &result.segments[segment - 2].values[..view.slide_blocks * c.np]);
    let vn = oracle_virtual_noise(&view, sigma, prev);
    let local = &sigma[view.coeff_range.clone()];
    let clean = view.sub_matrix.clone() * nalgebra::DVector::from_column_slice(local);
    let parts = SvnrParts {
        signal_energy: clean.norm_squared(),
        total_noise: norm_sq(&vn.n_virt),
        forward_noise: norm_sq(&vn.forward_part),
        backward_noise: norm_sq(&vn.backward_part),
    };
    let est = &result.segments[segment - 1].values;
    let block_errors = (1..=c.segment_pulses)
        .map(|s| {
            let r = view.block_columns(s);
            r.map(|j| (est[j] - local[j]).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    Ok((parts, block_errors, vn))
}

fn run_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> CliResult<TrialOutput> {
    let data = trial_data(cfg, cell, trial)?;
    let params = cfg.solver_params();
    let base = baseline_params(&data, &params);
    let mut out = TrialOutput::default();
    for &solver in &cfg.solver.methods {
        let t0 = Instant::now();
        let result = reconstruct(&data.matrix, &data.y, &data.config, solver, &params, &base)?;
        let seconds = t0.elapsed().as_secs_f64();
        let m = metrics(&data.scene.coefficients, &result.estimate, &data.waveform, data.config.nyquist_len())?;
        let mut svnr = None;
        if solver.is_segmented() {
            let segment = cfg.probe_segment.min(data.config.segment_count());
            let (parts, block_errors, vn) = probe(&data, &result, segment)?;
            svnr = Some(parts);
            for (i, e) in block_errors.into_iter().enumerate() {
                out.blocks.push(BlockRow { cell: *cell, trial, solver, segment, s: i + 1, error_norm: e });
            }
            if trial == 0 {
                out.noise.push(VirtualNoiseSeries {
                    cell: *cell,
                    trial,
                    solver,
                    segment,
                    total: vn.n_virt,
                    forward: vn.forward_part,
                    backward: vn.backward_part,
                });
            }
        }
        out.rows.push(TrialRow {
            cell: *cell,
            trial,
            solver,
            sparsity: m.support_size,
            estimated_sparsity: m.estimated_support_size,
            relative_error: m.relative_error,
            cdr: m.cdr,
            rsnr_signal: m.rsnr.signal_energy,
            rsnr_error: m.rsnr.error_energy,
            isnr_db: data.isnr.is_finite().then(|| 10.0 * data.isnr.log10()),
            svnr,
            failed_segments: result.failed_segments(),
        });
        out.timings.push(TimingRow { cell: *cell, trial, solver, seconds });
    }
    Ok(out)
}

/// Runs every trial of the selected cells (all cells when `only` is `None`).
pub fn run_cells(cfg: &ExperimentConfig, only: Option<&[usize]>) -> CliResult<ExperimentReport> {
    cfg.validate()?;
    let started = Instant::now();
    let cells: Vec<Cell> = cfg.cells().into_iter().filter(|c| only.is_none_or(|ids| ids.contains(&c.id))).collect();
    if cells.is_empty() {
        return Err(CliError::invalid("cell", "no cell matches the selection"));
    }
    let jobs: Vec<(Cell, usize)> = cells.iter().flat_map(|c| (0..cfg.trials).map(move |t| (*c, t))).collect();
    let outputs: Vec<TrialOutput> = jobs.par_iter().map(|(c, t)| run_trial(cfg, c, *t)).collect::<CliResult<_>>()?;
    let mut report = ExperimentReport {
        config: cfg.clone(),
        cells: cells.clone(),
        trials: Vec::new(),
        blocks: Vec::new(),
        timings: Vec::new(),
        virtual_noise: Vec::new(),
        resources: Vec::new(),
        wall_clock_s: 0.0,
    };
    for o in outputs {
        report.trials.extend(o.rows);
        report.blocks.extend(o.blocks);
        report.timings.extend(o.timings);
        report.virtual_noise.extend(o.noise);
    }
    let key = |c: &Cell, t: usize, s: SolverKind| (cell_key(c), t, s);
    report.trials.sort_by(|a, b| key(&a.cell, a.trial, a.solver).partial_cmp(&key(&b.cell, b.trial, b.solver)).unwrap());
    report.blocks.sort_by(|a, b| (key(&a.cell, a.trial, a.solver), a.s).partial_cmp(&(key(&b.cell, b.trial, b.solver), b.s)).unwrap());
    report.timings.sort_by(|a, b| key(&a.cell, a.trial, a.solver).partial_cmp(&key(&b.cell, b.trial, b.solver)).unwrap());
    report.virtual_noise.sort_by(|a, b| key(&a.cell, a.trial, a.solver).partial_cmp(&key(&b.cell, b.trial, b.solver)).unwrap());
    let (_, np, r, p) = cfg.radar_counts();
    let mut seg: Vec<usize> = cfg.sweep.segment_pulses.clone();
    seg.sort_unstable();
    seg.dedup();
    let mean_k = report.trials.iter().map(|r| r.sparsity as f64).sum::<f64>() / report.trials.len().max(1) as f64;
    report.resources = seg
        .iter()
        .map(|&s| {
            let k = mean_k.round() as u64;
            let k_seg = ((mean_k * s as f64) / (p as f64 - 1.0)).ceil() as u64;
            resource_accounting(p as u64, (np / r) as u64, np as u64, s as u64, k, k_seg)
        })
        .collect();
    report.wall_clock_s = started.elapsed().as_secs_f64();
    Ok(report)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    run_cells(cfg, None)
}

/// Sort key that orders rows by their parameter tuple. Floats are compared
/// through `f64::total_cmp` order via their ordered bit patterns.
fn cell_key(c: &Cell) -> (u64, u8, u64, usize, usize) {
    fn ord(v: f64) -> u64 {
        let b = v.to_bits();
        if b >> 63 == 1 {
            !b
        } else {
            b | (1 << 63)
        }
    }
    let (kind, level) = match c.noise {
        NoiseCell::Noiseless => (0, 0),
        NoiseCell::Isnr(v) => (1, ord(v)),
        NoiseCell::N0(v) => (2, ord(v)),
    };
    (c.p.map_or(0, ord), kind, level, c.segment_pulses, c.slide_pulses)
}
