//! Aggregated tables behind each figure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use segsr_core::analysis::metrics::{ratio_db, svnr_db, SvnrParts};
use segsr_core::pipeline::SolverKind;

use crate::config::Cell;
use crate::error::{CliError, CliResult};
use crate::experiment::ExperimentReport;
use crate::output::{cell_fields, fmt_db, fmt_f, fmt_opt, write_table, CELL_COLUMNS};

pub const FIGURES: [&str; 8] = ["fig5a", "fig5b", "fig6", "fig7", "fig8", "fig9", "fig10", "resources"];

/// Means over the trials of one `(cell, solver)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub cell: Cell,
    pub solver: SolverKind,
    pub trials: usize,
    /// Over trials with a non-empty scene.
    pub mean_relative_error: Option<f64>,
    pub mean_cdr: Option<f64>,
    /// Ratio of mean echo energy to mean error energy.
    pub rsnr_db: Option<f64>,
    pub mean_trial_rsnr_db: Option<f64>,
    /// `(SVNR_o, SVNR_a, SVNR_b)`.
    pub svnr_db: Option<(f64, f64, f64)>,
    pub mean_runtime_s: f64,
    pub mean_sparsity: f64,
    pub mean_estimated_sparsity: f64,
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn aggregate(report: &ExperimentReport) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(usize, SolverKind), Vec<usize>> = BTreeMap::new();
    for (i, r) in report.trials.iter().enumerate() {
        groups.entry((r.cell.id, r.solver)).or_default().push(i);
    }
    let mut runtimes: BTreeMap<(usize, SolverKind), Vec<f64>> = BTreeMap::new();
    for t in &report.timings {
        runtimes.entry((t.cell.id, t.solver)).or_default().push(t.seconds);
    }
    let order: Vec<usize> = report.cells.iter().map(|c| c.id).collect();
    let mut out: Vec<Aggregate> = groups
        .into_iter()
        .map(|((id, solver), idx)| {
            let rows: Vec<_> = idx.iter().map(|&i| &report.trials[i]).collect();
            let signal = mean(rows.iter().map(|r| r.rsnr_signal)).unwrap_or(0.0);
            let error = mean(rows.iter().map(|r| r.rsnr_error)).unwrap_or(0.0);
            let parts: Vec<SvnrParts> = rows.iter().filter_map(|r| r.svnr).collect();
            Aggregate {
                cell: rows[0].cell,
                solver,
                trials: rows.len(),
                mean_relative_error: mean(rows.iter().filter_map(|r| r.relative_error)),
                mean_cdr: mean(rows.iter().filter_map(|r| r.cdr)),
                rsnr_db: ratio_db(signal, error).ok(),
                mean_trial_rsnr_db: mean(rows.iter().filter_map(|r| ratio_db(r.rsnr_signal, r.rsnr_error).ok())),
                svnr_db: if parts.is_empty() { None } else { svnr_db(&parts).ok() },
                mean_runtime_s: mean(runtimes.get(&(id, solver)).into_iter().flatten().copied()).unwrap_or(0.0),
                mean_sparsity: mean(rows.iter().map(|r| r.sparsity as f64)).unwrap_or(0.0),
                mean_estimated_sparsity: mean(rows.iter().map(|r| r.estimated_sparsity as f64)).unwrap_or(0.0),
            }
        })
        .collect();
    out.sort_by_key(|a| (order.iter().position(|&id| id == a.cell.id), a.solver));
    out
}

/// `(cell, solver, segment, s, mean error, count)`.
pub type BlockMean = (Cell, SolverKind, usize, usize, f64, usize);

/// Mean block error per `(cell, solver, s)`.
pub fn block_means(report: &ExperimentReport) -> Vec<BlockMean> {
    let mut groups = BTreeMap::<_, (Cell, Vec<f64>)>::new();
    for b in &report.blocks {
        groups.entry((b.cell.id, b.solver, b.segment, b.s)).or_insert_with(|| (b.cell, Vec::new())).1.push(b.error_norm);
    }
    groups
        .into_iter()
        .map(|((_, solver, segment, s), (cell, v))| (cell, solver, segment, s, mean(v.iter().copied()).unwrap_or(0.0), v.len()))
        .collect()
}

fn header(extra: &[&str]) -> Vec<String> {
    CELL_COLUMNS.iter().chain(["solver"].iter()).chain(extra.iter()).map(|s| s.to_string()).collect()
}

fn prefix(cell: &Cell, solver: SolverKind) -> Vec<String> {
    let mut v = cell_fields(cell);
    v.push(solver.to_string());
    v
}

/// Header and rows of one figure table.
pub fn figure_table(report: &ExperimentReport, figure: &str) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let missing = || CliError::MissingSeries(figure.to_string());
    let aggs = aggregate(report);
    let (head, rows): (Vec<String>, Vec<Vec<String>>) = match figure {
        "fig5a" => {
            let series = report
                .virtual_noise
                .iter()
                .find(|s| s.solver == SolverKind::OmpPks)
                .or_else(|| report.virtual_noise.first())
                .ok_or_else(missing)?;
            let rows = (0..series.total.len())
                .map(|i| {
                    let mut r = prefix(&series.cell, series.solver);
                    r.extend([
                        series.trial.to_string(),
                        series.segment.to_string(),
                        i.to_string(),
                        fmt_f(series.total[i].abs()),
                        fmt_f(series.forward[i].abs()),
                        fmt_f(series.backward[i].abs()),
                    ]);
                    r
                })
                .collect();
            (header(&["trial", "segment", "row", "abs_virtual_noise", "abs_forward", "abs_backward"]), rows)
        }
        "fig5b" => {
            let rows = aggs
                .iter()
                .filter_map(|a| {
                    let (o, fa, fb) = a.svnr_db?;
                    let mut r = prefix(&a.cell, a.solver);
                    r.extend([a.trials.to_string(), fmt_db(o), fmt_db(fa), fmt_db(fb)]);
                    Some(r)
                })
                .collect();
            (header(&["trials", "svnr_o_db", "svnr_a_db", "svnr_b_db"]), rows)
        }
        "fig6" => {
            let rows = aggs
                .iter()
                .map(|a| {
                    let mut r = prefix(&a.cell, a.solver);
                    r.extend([a.trials.to_string(), fmt_opt(a.mean_relative_error), fmt_opt(a.mean_cdr)]);
                    r
                })
                .collect();
            (header(&["trials", "mean_relative_error", "mean_cdr"]), rows)
        }
        "fig7" => {
            let rows = block_means(report)
                .into_iter()
                .map(|(cell, solver, segment, s, m, n)| {
                    let mut r = prefix(&cell, solver);
                    r.extend([n.to_string(), segment.to_string(), s.to_string(), fmt_f(m)]);
                    r
                })
                .collect();
            (header(&["trials", "segment", "s", "mean_block_error"]), rows)
        }
        "fig8" => {
            let rows = aggs
                .iter()
                .map(|a| {
                    let mut r = prefix(&a.cell, a.solver);
                    r.extend([a.trials.to_string(), fmt_opt(a.mean_relative_error)]);
                    r
                })
                .collect();
            (header(&["trials", "mean_relative_error"]), rows)
        }
        "fig9" => {
            let rows = aggs
                .iter()
                .map(|a| {
                    let mut r = prefix(&a.cell, a.solver);
                    r.extend([a.trials.to_string(), fmt_f(a.mean_runtime_s)]);
                    r
                })
                .collect();
            (header(&["trials", "mean_runtime_s"]), rows)
        }
        "fig10" => {
            let rows = aggs
                .iter()
                .map(|a| {
                    let mut r = prefix(&a.cell, a.solver);
                    r.extend([
                        a.trials.to_string(),
                        a.rsnr_db.map_or(String::new(), fmt_db),
                        a.mean_trial_rsnr_db.map_or(String::new(), fmt_db),
                    ]);
                    r
                })
                .collect();
            (header(&["trials", "rsnr_db", "mean_trial_rsnr_db"]), rows)
        }
        "resources" => {
            let rows = report
                .resources
                .iter()
                .map(|r| {
                    vec![
                        r.pulses.to_string(),
                        r.mp.to_string(),
                        r.np.to_string(),
                        r.segment_pulses.to_string(),
                        r.bytes_full.to_string(),
                        segsr_core::analysis::format_binary(r.bytes_full),
                        r.bytes_segsr.to_string(),
                        segsr_core::analysis::format_binary(r.bytes_segsr),
                        r.flops_full.to_string(),
                        r.flops_segsr.to_string(),
                    ]
                })
                .collect();
            let head = ["P", "Mp", "Np", "S", "bytes_full", "full", "bytes_segsr", "segsr", "flops_full", "flops_segsr"];
            (head.iter().map(|s| s.to_string()).collect(), rows)
        }
        _ => return Err(missing()),
    };
    if rows.is_empty() {
        return Err(missing());
    }
    Ok((head, rows))
}

/// Writes `<dir>/<figure>.csv` and returns its path.
pub fn emit_figure_data(report: &ExperimentReport, figure: &str, dir: &Path) -> CliResult<PathBuf> {
    let (head, rows) = figure_table(report, figure)?;
    let path = dir.join(format!("{figure}.csv"));
    write_table(&path, &head, &rows)?;
    Ok(path)
}
