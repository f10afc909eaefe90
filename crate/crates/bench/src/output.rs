//! Per-run JSON documents and the flat CSV summary.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use geopd_core::RunRecord;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};

pub const RUNS_DIR: &str = "runs";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub solver: String,
    pub f: f64,
    pub residual: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub projections: usize,
    pub seconds: f64,
    pub status: String,
}

impl From<&RunRecord> for SummaryRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            problem: r.problem.clone(),
            solver: r.solver.name().to_string(),
            f: r.objective,
            residual: r.residual,
            outer_iters: r.outer_iterations,
            inner_iters: r.inner_iterations,
            projections: r.projections,
            seconds: r.seconds,
            status: r.status.name().to_string(),
        }
    }
}

pub fn run_file_name(index: usize, record: &RunRecord) -> String {
    let clean: String = record
        .problem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("{index:06}_{clean}_{}_r{}.json", record.solver.name(), record.replication)
}

pub fn write_run(dir: &Path, index: usize, record: &RunRecord) -> Result<PathBuf> {
    let runs = dir.join(RUNS_DIR);
    fs::create_dir_all(&runs).map_err(io_err(&runs))?;
    let path = runs.join(run_file_name(index, record));
    let text = serde_json::to_string_pretty(record)?;
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_run(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Every run document below `dir/runs`, in file-name order.
pub fn read_runs(dir: &Path) -> Result<Vec<RunRecord>> {
    let runs = dir.join(RUNS_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&runs)
        .map_err(io_err(&runs))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_run(p)).collect()
}

/// Appends one row, writing the header when the file is new.
pub fn append_summary(path: &Path, row: &SummaryRow) -> Result<()> {
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row)?;
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes `(series, x, y)` points of a curve family as CSV.
pub fn write_curve_points(path: &Path, header: [&str; 3], points: &[(String, f64, f64)]) -> Result<()> {
    let mut file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(&mut file);
    w.write_record(header)?;
    for (series, x, y) in points {
        w.write_record([series.clone(), x.to_string(), y.to_string()])?;
    }
    w.flush().map_err(io_err(path))?;
    drop(w);
    file.flush().map_err(io_err(path))?;
    Ok(())
}
