use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use segsr_cli::config::ExperimentConfig;
use segsr_cli::error::{CliError, CliResult};
use segsr_cli::experiment::{run_cells, trial_data};
use segsr_cli::output::write_outputs;
use segsr_cli::suites::{default_bounds_config, theorem1_suite, theorem4_suite};
use segsr_core::analysis::resources::{format_binary, resource_accounting};
use segsr_core::analysis::rip::{binomial, rip_bruteforce_limited, rip_sampled, DEFAULT_SUBSET_LIMIT};
use segsr_core::pipeline::SolverKind;
use segsr_core::sampler::io::{load, save, MatrixDump};
use segsr_core::segment::segment_view;

#[derive(Debug, Parser)]
#[command(name = "segsr", version, about = "Segment-sliding reconstruction of random-demodulator radar samples")]
struct Cli {
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count override.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Run a single solver.
    #[arg(long, global = true)]
    solver: Option<SolverKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a sweep and write CSV tables and a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict the run to these cell ids (see the manifest).
        #[arg(long, value_delimiter = ',')]
        cell: Vec<usize>,
    },
    /// Check the virtual-noise and amplitude-error bounds on small instances.
    Bounds {
        /// Defaults to the built-in small-instance sweep.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Perturbed entries of the previous estimate (virtual-noise suite).
        #[arg(long, default_value_t = 3)]
        max_errors: usize,
        /// Write per-record JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Restricted isometry constant of a matrix (binary dump or headerless CSV).
    Rip {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        /// Random subsets to use when exhaustion exceeds the subset limit.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SUBSET_LIMIT)]
        limit: u128,
    },
    /// Dump the measurement matrix (or one segment's) of a trial.
    Matrix {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        cell: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        segment: Option<usize>,
    },
    /// Storage of the direct and segmented problems.
    Storage {
        #[arg(long = "P")]
        pulses: u64,
        #[arg(long = "Mp")]
        mp: u64,
        #[arg(long = "Np")]
        np: u64,
        #[arg(long = "S", value_delimiter = ',', default_value = "2,3,4")]
        segments: Vec<u64>,
    },
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn load_config(path: &Path, cli: &Cli) -> CliResult<ExperimentConfig> {
    ExperimentConfig::load(path)?.with_overrides(cli.seed, cli.trials, cli.solver)
}

fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    if path.extension().and_then(|e| e.to_str()) != Some("csv") {
        return Ok(load(path)?.matrix);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::ConfigParse { path: path.display().to_string(), message: format!("row {}: {e}", i + 1) })?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::ConfigParse { path: path.display().to_string(), message: "ragged rows".into() });
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn run(cli: &Cli) -> CliResult<ExitCode> {
    match &cli.command {
        Command::Simulate { config, out, cell } => {
            let cfg = load_config(config, cli)?;
            let report = run_cells(&cfg, (!cell.is_empty()).then_some(cell.as_slice()))?;
            let files = write_outputs(&report, out)?;
            print_json(&json!({
                "cells": report.cells.len(),
                "trial_rows": report.trials.len(),
                "wall_clock_s": report.wall_clock_s,
                "files": files,
            }));
        }
        Command::Bounds { config, max_errors, out } => {
            let cfg = match config {
                Some(p) => load_config(p, cli)?,
                None => default_bounds_config(cli.trials.unwrap_or(100), cli.seed.unwrap_or(1)),
            };
            let (s1, r1) = theorem1_suite(&cfg, *max_errors)?;
            let (s4, r4) = theorem4_suite(&cfg)?;
            if let Some(path) = out {
                let body =
                    serde_json::to_string_pretty(&json!({ "virtual_noise": r1, "amplitude": r4 })).map_err(|e| CliError::io(path, e))?;
                std::fs::write(path, body).map_err(|e| CliError::io(path, e))?;
            }
            let ok = s1.passed() && s4.passed();
            print_json(&json!({ "suites": [s1, s4], "passed": ok }));
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Rip { matrix, k, samples, limit } => {
            let a = read_matrix(matrix)?;
            let est = match rip_bruteforce_limited(&a, *k, *limit) {
                Ok(e) => e,
                Err(segsr_core::Error::TooLarge { .. }) => rip_sampled(&a, *k, *samples, cli.seed.unwrap_or(0)),
                Err(e) => return Err(e.into()),
            };
            print_json(&json!({
                "rows": a.nrows(),
                "cols": a.ncols(),
                "order": est.order,
                "delta": est.delta,
                "method": est.method,
                "subsets_checked": est.subsets.to_string(),
                "subsets_total": binomial(a.ncols(), *k).to_string(),
            }));
        }
        Command::Matrix { config, out, cell, trial, segment } => {
            let cfg = load_config(config, cli)?;
            let cells = cfg.cells();
            let c = cells.get(*cell).ok_or_else(|| CliError::invalid("cell", format!("no cell {cell}")))?;
            let data = trial_data(&cfg, c, *trial)?;
            let dump = match segment {
                None => MatrixDump { config: Some(data.config.clone()), matrix: data.matrix.entries.clone(), y: Some(data.y.clone()) },
                Some(l) => {
                    let v = segment_view(&data.matrix, &data.y, &data.config, *l)?;
                    MatrixDump { config: None, matrix: v.sub_matrix, y: Some(v.y) }
                }
            };
            save(out, &dump)?;
            print_json(&json!({ "rows": dump.matrix.nrows(), "cols": dump.matrix.ncols(), "file": out }));
        }
        Command::Storage { pulses, mp, np, segments } => {
            let rows: Vec<_> = segments
                .iter()
                .map(|&s| {
                    let r = resource_accounting(*pulses, *mp, *np, s, 0, 0);
                    json!({
                        "S": s,
                        "bytes_segsr": r.bytes_segsr,
                        "segsr": format_binary(r.bytes_segsr),
                    })
                })
                .collect();
            let full = resource_accounting(*pulses, *mp, *np, 1, 0, 0).bytes_full;
            print_json(&json!({ "P": pulses, "Mp": mp, "Np": np, "bytes_full": full, "full": format_binary(full), "segments": rows }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).expect("error records serialize"));
            ExitCode::FAILURE
        }
    }
}
