//! Grid execution on a work queue with a single result collector.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use geopd_core::record::SCHEMA_VERSION;
use geopd_core::{solve_alm, solve_pd, RunRecord, SolverKind, Status};
use geopd_zoo::{stream, ZooSpec};
use nalgebra::DVector;
use rand::Rng;

use crate::config::{BenchConfig, GridEntry, SolverParams, StartRule};
use crate::error::{io_err, BenchError, Result};
use crate::output::{append_summary, write_run, write_summary, SummaryRow, SUMMARY_FILE};

/// Stream id of uniform starting points.
pub const START_STREAM: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub index: usize,
    pub problem: String,
    pub solver: SolverKind,
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct GridOutcome {
    /// Successful runs in grid order.
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl GridOutcome {
    /// Errors, numerical failures and time-limit hits.
    pub fn failed_runs(&self) -> usize {
        self.failures.len()
            + self
                .records
                .iter()
                .filter(|r| matches!(r.status, Status::NumericalFailure | Status::TimeLimit))
                .count()
    }
}

struct Task<'a> {
    index: usize,
    entry: &'a GridEntry,
    replication: usize,
}

fn tasks(config: &BenchConfig) -> Vec<Task<'_>> {
    let mut out = Vec::with_capacity(config.run_count());
    for entry in &config.grid {
        for replication in 0..entry.replications {
            out.push(Task {
                index: out.len(),
                entry,
                replication,
            });
        }
    }
    out
}

/// Instance of replication `rep`: seeded families step their seed by `rep`.
pub fn replication_spec(spec: &ZooSpec, rep: usize) -> ZooSpec {
    match spec.seed() {
        Some(seed) => spec.with_seed(seed + rep as u64),
        None => spec.clone(),
    }
}

pub fn starting_point(rule: &StartRule, default: &DVector<f64>, seed_base: u64, rep: usize) -> DVector<f64> {
    match *rule {
        StartRule::Default => default.clone(),
        StartRule::Uniform { lo, hi } => {
            let mut rng = stream(seed_base + rep as u64, START_STREAM);
            DVector::from_fn(default.len(), |_, _| rng.random_range(lo..=hi))
        }
    }
}

/// Runs one solver on one instance.
pub fn run_one(
    spec: &ZooSpec,
    solver: SolverKind,
    params: &SolverParams,
    x0: Option<&DVector<f64>>,
) -> Result<RunRecord> {
    let inst = spec.build()?;
    let x0 = x0.unwrap_or(&inst.x0);
    Ok(match params {
        SolverParams::Pd(p) => solve_pd(&inst.problem, p, x0, None)?,
        SolverParams::Alm(p) => solve_alm(&inst.problem, p, x0)?,
        SolverParams::Oracle => oracle_record(spec, &inst.problem)?,
    })
    .map(|mut r: RunRecord| {
        r.solver = solver;
        r
    })
}

fn oracle_record(spec: &ZooSpec, problem: &geopd_core::Problem) -> Result<RunRecord> {
    let start = Instant::now();
    let (f, x) = spec
        .global_optimum()?
        .ok_or_else(|| BenchError::Config(format!("no enumeration oracle for family {}", spec.family())))?;
    let (_, violation) = problem.evaluate_constraints(&x)?;
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        problem: problem.name.clone(),
        replication: 0,
        solver: SolverKind::EnumerationOracle,
        params: serde_json::Value::Null,
        status: Status::Converged,
        message: None,
        point: x.as_slice().to_vec(),
        x: x.as_slice().to_vec(),
        objective: f,
        objective_at_x: f,
        residual: violation,
        constraint_violation: violation,
        outer_iterations: 0,
        inner_iterations: 0,
        projections: 0,
        seconds: start.elapsed().as_secs_f64(),
        history: Vec::new(),
        certificates: Vec::new(),
        feasibility_stationarity: None,
        iterates: Vec::new(),
    })
}

fn run_task(task: &Task<'_>, time_limit: f64) -> Result<RunRecord> {
    let entry = task.entry;
    let params = SolverParams::resolve(entry.solver, &entry.overrides, time_limit)?;
    let spec = replication_spec(&entry.problem, task.replication);
    let inst = spec.build()?;
    let x0 = starting_point(&entry.start, &inst.x0, entry.seed_base, task.replication);
    let mut record = run_one(&spec, entry.solver, &params, Some(&x0))?;
    record.replication = task.replication;
    Ok(record)
}

fn instance_label(spec: &ZooSpec) -> String {
    spec.build()
        .map(|inst| inst.problem.name)
        .unwrap_or_else(|_| spec.family().to_string())
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "run panicked".into())
}

/// Runs every `(problem, solver, replication)` of the grid on `threads`
/// workers. With an output directory, each record is written as soon as it
/// arrives and `summary.csv` is rewritten in grid order at the end.
pub fn run_grid(config: &BenchConfig, threads: usize) -> Result<GridOutcome> {
    config.validate()?;
    let tasks = tasks(config);
    let out_dir = config.output_dir.as_deref();
    let summary_path = out_dir.map(|d| d.join(SUMMARY_FILE));
    if let (Some(dir), Some(path)) = (out_dir, summary_path.as_deref()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        if path.exists() {
            std::fs::remove_file(path).map_err(io_err(path))?;
        }
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<RunRecord>)>();
    let mut slots: Vec<Option<std::result::Result<RunRecord, String>>> = vec![None; tasks.len()];

    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(tasks.len()) {
            let tx = tx.clone();
            let (tasks, next) = (&tasks, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                let result = catch_unwind(AssertUnwindSafe(|| run_task(task, config.time_limit_secs)))
                    .unwrap_or_else(|p| Err(BenchError::Config(panic_message(p))));
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, result) in rx {
            slots[i] = Some(collect(out_dir, summary_path.as_deref(), i, result));
        }
    });

    let mut outcome = GridOutcome::default();
    for (task, slot) in tasks.iter().zip(slots) {
        match slot.expect("every task reports") {
            Ok(r) => outcome.records.push(r),
            Err(message) => outcome.failures.push(RunFailure {
                index: task.index,
                problem: instance_label(&replication_spec(&task.entry.problem, task.replication)),
                solver: task.entry.solver,
                replication: task.replication,
                message,
            }),
        }
    }
    if let Some(path) = summary_path.as_deref() {
        let rows: Vec<SummaryRow> = outcome.records.iter().map(SummaryRow::from).collect();
        write_summary(path, &rows)?;
    }
    Ok(outcome)
}

fn collect(
    out_dir: Option<&Path>,
    summary: Option<&Path>,
    index: usize,
    result: Result<RunRecord>,
) -> std::result::Result<RunRecord, String> {
    let record = result.map_err(|e| e.to_string())?;
    if let (Some(dir), Some(summary)) = (out_dir, summary) {
        write_run(dir, index, &record).map_err(|e| e.to_string())?;
        append_summary(summary, &SummaryRow::from(&record)).map_err(|e| e.to_string())?;
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_starts_are_reproducible_and_in_range() {
        let rule = StartRule::Uniform { lo: -10.0, hi: 10.0 };
        let d = DVector::zeros(5);
        let a = starting_point(&rule, &d, 7, 3);
        assert_eq!(a, starting_point(&rule, &d, 7, 3));
        assert_ne!(a, starting_point(&rule, &d, 7, 4));
        assert!(a.iter().all(|v| (-10.0..=10.0).contains(v)));
    }

    #[test]
    fn replications_step_instance_seeds() {
        let spec = ZooSpec::SparseQp {
            n: 10,
            n_cond: 10.0,
            s: 3,
            nu: 1.0,
            seed: 5,
        };
        assert_eq!(replication_spec(&spec, 2).seed(), Some(7));
        assert_eq!(replication_spec(&ZooSpec::BeckEldar, 2), ZooSpec::BeckEldar);
    }
}
