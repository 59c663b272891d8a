//! CSV and manifest writers.
//!
//! Floats are printed in shortest round-trip form; dB values with four
//! decimals. Undefined values are empty fields.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Cell, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{trial_seeds, ExperimentReport};
use crate::figures::emit_figure_data;

/// Leading columns of every row: the full parameter tuple of its cell.
pub const CELL_COLUMNS: [&str; 6] = ["cell", "p", "isnr_db", "n0", "S", "W"];

pub fn fmt_f(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_db(v: f64) -> String {
    format!("{v:.4}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt_f)
}

pub fn cell_fields(c: &Cell) -> Vec<String> {
    vec![
        c.id.to_string(),
        fmt_opt(c.p),
        c.noise.isnr_db().map_or(String::new(), fmt_db),
        fmt_opt(c.noise.n0()),
        c.segment_pulses.to_string(),
        c.slide_pulses.to_string(),
    ]
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::io(path, e);
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn columns(extra: &[&str]) -> Vec<String> {
    CELL_COLUMNS.iter().chain(extra).map(|s| s.to_string()).collect()
}

pub fn trials_table(report: &ExperimentReport) -> (Vec<String>, Vec<Vec<String>>) {
    let head = columns(&[
        "trial",
        "solver",
        "scene_seed",
        "chipping_seed",
        "noise_seed",
        "sparsity",
        "estimated_sparsity",
        "relative_error",
        "cdr",
        "rsnr_signal",
        "rsnr_error",
        "rsnr_db",
        "realized_isnr_db",
        "svnr_signal",
        "svnr_total",
        "svnr_forward",
        "svnr_backward",
        "failed_segments",
    ]);
    let rows = report
        .trials
        .iter()
        .map(|t| {
            let seeds = trial_seeds(report.config.seed, &t.cell, t.trial);
            let rsnr = segsr_core::analysis::metrics::ratio_db(t.rsnr_signal, t.rsnr_error).ok();
            let mut r = cell_fields(&t.cell);
            r.extend([
                t.trial.to_string(),
                t.solver.to_string(),
                seeds.scene.to_string(),
                seeds.chipping.to_string(),
                seeds.noise.to_string(),
                t.sparsity.to_string(),
                t.estimated_sparsity.to_string(),
                fmt_opt(t.relative_error),
                fmt_opt(t.cdr),
                fmt_f(t.rsnr_signal),
                fmt_f(t.rsnr_error),
                rsnr.map_or(String::new(), fmt_db),
                t.isnr_db.map_or(String::new(), fmt_db),
                fmt_opt(t.svnr.map(|s| s.signal_energy)),
                fmt_opt(t.svnr.map(|s| s.total_noise)),
                fmt_opt(t.svnr.map(|s| s.forward_noise)),
                fmt_opt(t.svnr.map(|s| s.backward_noise)),
                t.failed_segments.to_string(),
            ]);
            r
        })
        .collect();
    (head, rows)
}

pub fn blocks_table(report: &ExperimentReport) -> (Vec<String>, Vec<Vec<String>>) {
    let head = columns(&["trial", "solver", "segment", "s", "error_norm"]);
    let rows = report
        .blocks
        .iter()
        .map(|b| {
            let mut r = cell_fields(&b.cell);
            r.extend([b.trial.to_string(), b.solver.to_string(), b.segment.to_string(), b.s.to_string(), fmt_f(b.error_norm)]);
            r
        })
        .collect();
    (head, rows)
}

pub fn timings_table(report: &ExperimentReport) -> (Vec<String>, Vec<Vec<String>>) {
    let head = columns(&["trial", "solver", "seconds"]);
    let rows = report
        .timings
        .iter()
        .map(|t| {
            let mut r = cell_fields(&t.cell);
            r.extend([t.trial.to_string(), t.solver.to_string(), fmt_f(t.seconds)]);
            r
        })
        .collect();
    (head, rows)
}

#[derive(Debug, Serialize)]
struct OutputFile {
    file: String,
    rows: usize,
    /// Identical across runs with the same config and seed.
    deterministic: bool,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    schema_version: u32,
    master_seed: u64,
    seed_rule: &'static str,
    rerun: String,
    config: &'a ExperimentConfig,
    cells: &'a [Cell],
    outputs: Vec<OutputFile>,
    wall_clock_s: f64,
}

const SEED_RULE: &str = "scene = derive(master, scene, [bits(p), trial]); chipping = derive(master, chipping, [trial]); \
noise = derive(master, noise, [bits(p), noise key, trial]); derive = chained splitmix64";

/// Writes every raw table, the requested figure tables, `config.json` and
/// `manifest.json` into `dir`. Returns the written paths.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let mut outputs = Vec::new();
    let tables = [
        ("trials.csv", trials_table(report), true),
        ("segment_blocks.csv", blocks_table(report), true),
        ("timings.csv", timings_table(report), false),
    ];
    for (name, (head, rows), deterministic) in tables {
        let path = dir.join(name);
        write_table(&path, &head, &rows)?;
        outputs.push(OutputFile { file: name.into(), rows: rows.len(), deterministic });
        written.push(path);
    }
    for f in &report.config.figures {
        let path = emit_figure_data(report, f, dir)?;
        let rows = crate::figures::figure_table(report, f)?.1.len();
        // runtime tables inherit the wall-clock jitter
        outputs.push(OutputFile { file: format!("{f}.csv"), rows, deterministic: f != "fig9" });
        written.push(path);
    }
    let config_path = dir.join("config.json");
    let json = serde_json::to_string_pretty(&report.config).map_err(|e| CliError::io(&config_path, e))?;
    std::fs::write(&config_path, json).map_err(|e| CliError::io(&config_path, e))?;
    written.push(config_path);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        core_version: segsr_core::VERSION,
        schema_version: report.config.schema_version,
        master_seed: report.config.seed,
        seed_rule: SEED_RULE,
        rerun: format!("segsr simulate --config {} --out <dir> --cell <id>", dir.join("config.json").display()),
        config: &report.config,
        cells: &report.cells,
        outputs,
        wall_clock_s: report.wall_clock_s,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::io(&path, e))?;
    std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formats() {
        assert_eq!(fmt_f(0.1), "0.1");
        assert_eq!(fmt_f(1e-20).parse::<f64>().unwrap(), 1e-20);
        assert_eq!(fmt_db(12.345678), "12.3457");
        assert_eq!(fmt_opt(None), "");
    }
}
