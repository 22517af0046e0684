//! Result files.
//!
//! `results.csv` holds one row per (solver, budget) with the columns
//! `solver,P,mean_loss,mean_psnr,mean_ssim,ee,mean_power,plp,time`; cells
//! without a feasible run and the `time` column without `--timing` are
//! empty. The per-figure files are wide tables with one column per solver.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::experiment::{ExperimentResults, MetricsRow};
use crate::solvers::SolverId;

pub const RESULTS_HEADER: [&str; 9] = [
    "solver",
    "P",
    "mean_loss",
    "mean_psnr",
    "mean_ssim",
    "ee",
    "mean_power",
    "plp",
    "time",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct Conventions {
    mean_psnr: &'static str,
    mean_ssim: &'static str,
    ee: &'static str,
    plp: &'static str,
}

const CONVENTIONS: Conventions = Conventions {
    mean_psnr: "estimated: delivered images score the cap, GS renders a log-linear loss calibration",
    mean_ssim: "estimated: delivered images score 1, GS renders 1 - loss",
    ee: "delivered payload bits per joule of transmit energy",
    plp: "fraction of frames whose realized capacity missed the payload",
};

#[derive(Serialize)]
struct JsonReport<'a> {
    #[serde(flatten)]
    results: &'a ExperimentResults,
    conventions: Conventions,
}

fn csv_writer(dir: &Path, name: &str) -> Result<(csv::Writer<File>, PathBuf)> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((csv::Writer::from_writer(file), path))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn solvers_in_order(rows: &[MetricsRow]) -> Vec<SolverId> {
    let mut out: Vec<SolverId> = Vec::new();
    for r in rows {
        if !out.contains(&r.solver) {
            out.push(r.solver);
        }
    }
    out
}

fn budgets_in_order(rows: &[MetricsRow]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in rows {
        if !out.contains(&r.budget_w) {
            out.push(r.budget_w);
        }
    }
    out
}

fn write_wide(dir: &Path, name: &str, rows: &[MetricsRow], pick: fn(&MetricsRow) -> Option<f64>) -> Result<()> {
    let solvers = solvers_in_order(rows);
    let (mut w, path) = csv_writer(dir, name)?;
    let mut header = vec!["P".to_owned()];
    header.extend(solvers.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for p in budgets_in_order(rows) {
        let mut record = vec![p.to_string()];
        for s in &solvers {
            let v = rows.iter().find(|r| r.solver == *s && r.budget_w == p).and_then(pick);
            record.push(cell(v));
        }
        w.write_record(&record)?;
    }
    finish(w, &path)
}

fn write_results_csv(dir: &Path, rows: &[MetricsRow]) -> Result<()> {
    let (mut w, path) = csv_writer(dir, "results.csv")?;
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.solver.to_string(),
            r.budget_w.to_string(),
            cell(r.mean_loss),
            cell(r.mean_psnr),
            cell(r.mean_ssim),
            cell(r.energy_efficiency),
            cell(r.mean_power),
            cell(r.packet_loss_prob),
            cell(r.wall_time_s),
        ])?;
    }
    finish(w, &path)
}

fn write_power_vs_threshold(dir: &Path, results: &ExperimentResults) -> Result<()> {
    let mut solvers: Vec<SolverId> = Vec::new();
    let mut thresholds: Vec<f64> = Vec::new();
    for r in &results.qoe_rows {
        if !solvers.contains(&r.solver) {
            solvers.push(r.solver);
        }
        if !thresholds.contains(&r.loss_threshold) {
            thresholds.push(r.loss_threshold);
        }
    }
    let (mut w, path) = csv_writer(dir, "power_vs_Lth.csv")?;
    let mut header = vec!["L_th".to_owned()];
    header.extend(solvers.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for th in thresholds {
        let mut record = vec![th.to_string()];
        for s in &solvers {
            let v = results
                .qoe_rows
                .iter()
                .find(|r| r.solver == *s && r.loss_threshold == th)
                .and_then(|r| r.mean_power);
            record.push(cell(v));
        }
        w.write_record(&record)?;
    }
    finish(w, &path)
}

/// Writes every result file into `dir`, creating it if needed.
pub fn emit_report(results: &ExperimentResults, dir: &Path) -> Result<()> {
    if results.rows.is_empty() && results.qoe_rows.is_empty() {
        return Err(CliError::Spec("nothing to report".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_results_csv(dir, &results.rows)?;

    let json_path = dir.join("results.json");
    let mut json = File::create(&json_path).map_err(|e| CliError::io(&json_path, e))?;
    serde_json::to_writer_pretty(
        &mut json,
        &JsonReport {
            results,
            conventions: CONVENTIONS,
        },
    )?;
    json.write_all(b"\n").map_err(|e| CliError::io(&json_path, e))?;

    write_wide(dir, "loss_vs_P.csv", &results.rows, |r| r.mean_loss)?;
    write_wide(dir, "psnr_vs_P.csv", &results.rows, |r| r.mean_psnr)?;
    write_wide(dir, "packetloss_vs_P.csv", &results.rows, |r| r.packet_loss_prob)?;
    write_power_vs_threshold(dir, results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::run_experiment;
    use crate::spec::ExperimentSpec;

    #[test]
    fn writes_all_files_with_fixed_columns() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::from_toml(
            "solvers = [\"apo\", \"robogs\", \"qgs\"]\npower_sweep_w = [0.01, 0.02]\nloss_thresholds = [0.02, 0.04]\n[scenario]\nnum_frames = 24\n",
        )
        .unwrap();
        let res = run_experiment(&spec, 3, false).unwrap();
        emit_report(&res, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULTS_HEADER.join(","));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "apo");
        assert_eq!(first[1], "0.01");
        assert_eq!(first[8], "");
        for name in ["results.json", "loss_vs_P.csv", "psnr_vs_P.csv", "packetloss_vs_P.csv", "power_vs_Lth.csv"] {
            assert!(dir.path().join(name).is_file(), "{name}");
        }
        let lth = std::fs::read_to_string(dir.path().join("power_vs_Lth.csv")).unwrap();
        assert!(lth.starts_with("L_th,qgs\n0.02,"));
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn empty_results_are_rejected_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let empty = ExperimentResults {
            seed: 0,
            num_frames: 1,
            rows: vec![],
            qoe_rows: vec![],
        };
        assert!(emit_report(&empty, &out).is_err());
        assert!(!out.exists());
    }
}
