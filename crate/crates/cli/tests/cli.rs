use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use segsr_cli::error::CliError;
use segsr_cli::experiment::run_experiment;
use segsr_cli::{emit_figure_data, ExperimentConfig};

fn segsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segsr")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn stderr_record(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("stderr is an error record")
}

const SMALL: &str = r#"
schema_version = 1
name = "small"
profile = "small"
trials = 3
seed = 5
figures = ["fig6", "fig8"]
[scene]
p = [0.1, 0.2]
[solver]
methods = ["omp", "omp-pks", "tompp"]
[sweep]
segment_pulses = [2, 3]
"#;

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn rows_of_cell(csv: &str, cell: &str) -> Vec<String> {
    csv.lines().skip(1).filter(|l| l.split(',').next() == Some(cell)).map(str::to_string).collect()
}

#[test]
fn storage_reports_byte_counts() {
    let v = stdout_json(&segsr(&["storage", "--P", "249", "--Mp", "200", "--Np", "1000"]));
    assert_eq!(v["bytes_full"], 98_803_200_000u64);
    assert_eq!(v["full"], "92.02 GiB");
    let seg: Vec<&str> = v["segments"].as_array().unwrap().iter().map(|s| s["segsr"].as_str().unwrap()).collect();
    assert_eq!(seg, ["9.16 MiB", "18.31 MiB", "30.52 MiB"]);
}

#[test]
fn missing_config_gives_io_record() {
    let rec = stderr_record(&segsr(&["simulate", "--config", "/nonexistent/x.toml", "--out", "/tmp/never"]));
    assert_eq!(rec["error"], "IoError");
    assert_eq!(rec["field"], "/nonexistent/x.toml");
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("segment_pulses = [2, 3]", "segment_pulses = [9]"));
    let rec = stderr_record(&segsr(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]));
    assert_eq!(rec["error"], "ConfigInvalid");
    assert_eq!(rec["field"], "sweep.segment_pulses");
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("seed = 5", "seed = 5\nsede = 6"));
    let rec = stderr_record(&segsr(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]));
    assert_eq!(rec["error"], "ConfigParse");
    assert!(rec["message"].as_str().unwrap().contains("sede"));
}

#[test]
fn simulate_writes_tables_and_single_cell_rerun_matches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let full = dir.path().join("full");
    let one = dir.path().join("one");
    stdout_json(&segsr(&["simulate", "--config", &cfg, "--out", full.to_str().unwrap()]));
    for f in ["trials.csv", "segment_blocks.csv", "timings.csv", "fig6.csv", "fig8.csv", "config.json", "manifest.json"] {
        assert!(full.join(f).is_file(), "{f} missing");
    }
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(full.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 4);
    assert!(manifest["rerun"].as_str().unwrap().contains("--cell"));

    stdout_json(&segsr(&["simulate", "--config", &cfg, "--out", one.to_str().unwrap(), "--cell", "3"]));
    let a = std::fs::read_to_string(full.join("trials.csv")).unwrap();
    let b = std::fs::read_to_string(one.join("trials.csv")).unwrap();
    assert_eq!(a.lines().next(), b.lines().next());
    assert!(!rows_of_cell(&a, "3").is_empty());
    assert_eq!(rows_of_cell(&a, "3"), rows_of_cell(&b, "3"));
    assert_eq!(b.lines().count() - 1, rows_of_cell(&b, "3").len());
}

#[test]
fn every_row_carries_its_cell_tuple() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    stdout_json(&segsr(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]));
    for f in ["trials.csv", "segment_blocks.csv", "fig6.csv", "fig8.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        assert_eq!(&header[..6], ["cell", "p", "isnr_db", "n0", "S", "W"], "{f}");
    }
}

#[test]
fn matrix_dump_feeds_rip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let dump = dir.path().join("seg.bin");
    let v = stdout_json(&segsr(&["matrix", "--config", &cfg, "--out", dump.to_str().unwrap(), "--segment", "2"]));
    // small profile: Np = 6, Mp = 3, S = 2
    assert_eq!((v["rows"].as_u64(), v["cols"].as_u64()), (Some(9), Some(12)));
    let r = stdout_json(&segsr(&["rip", "--matrix", dump.to_str().unwrap(), "--k", "2"]));
    assert_eq!(r["method"], "exact");
    assert_eq!(r["subsets_total"], "66");
    assert!(r["delta"].as_f64().unwrap() >= 0.0);

    let csv = dir.path().join("id.csv");
    std::fs::write(&csv, "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let r = stdout_json(&segsr(&["rip", "--matrix", csv.to_str().unwrap(), "--k", "2"]));
    assert_eq!(r["delta"].as_f64(), Some(0.0));
}

#[test]
fn ragged_csv_matrix_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "1,0\n0\n").unwrap();
    let rec = stderr_record(&segsr(&["rip", "--matrix", csv.to_str().unwrap(), "--k", "1"]));
    assert_eq!(rec["error"], "ConfigParse");
}

#[test]
fn bounds_suites_pass_on_a_short_run() {
    let v = stdout_json(&segsr(&["bounds", "--trials", "3", "--seed", "9"]));
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_or_empty_figure_is_missing_series() {
    let cfg: ExperimentConfig =
        toml::from_str(&SMALL.replace("trials = 3", "trials = 1").replace(r#"["omp", "omp-pks", "tompp"]"#, r#"["omp"]"#)).unwrap();
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_figure_data(&report, "fig42", dir.path()), Err(CliError::MissingSeries(_))));
    // the direct solve has no segments, so there are no block errors
    assert!(matches!(emit_figure_data(&report, "fig7", dir.path()), Err(CliError::MissingSeries(_))));
    assert!(emit_figure_data(&report, "fig6", dir.path()).unwrap().is_file());
}
