use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use geopd_bench::acceptance::{run_criterion, Verdict, CRITERIA};
use geopd_bench::config::{combine, parse_assignment};
use geopd_bench::output::{read_runs, write_curve_points};
use geopd_bench::profile::optimum_from;
use geopd_bench::runner::starting_point;
use geopd_bench::{
    performance_profile, relative_gap_distribution, run_grid, run_one, thread_count, BenchConfig, BenchError,
    FailureRule, Metric, SolverParams, StartRule, ENV_OUT_DIR,
};
use geopd_core::SolverKind;
use geopd_zoo::ZooSpec;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "geopd", version, about = "Penalty decomposition solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartKind {
    Default,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one zoo instance and print its run record.
    Solve {
        /// Problem spec as JSON, or `@path` to read it from a file.
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "pd")]
        solver: SolverKind,
        /// JSON file with parameter overrides.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Single override such as `tau0=0.1` or `inner.eps_in=1e-3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, value_enum, default_value = "default")]
        start: StartKind,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        /// Write the record here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a solver × problem grid from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Performance profiles and gap distributions from a grid's run records.
    Profile {
        /// Output directory of a previous `bench` run.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "runtime")]
        metric: Metric,
        /// Solver whose records supply the optimal values.
        #[arg(long)]
        oracle_solver: Option<SolverKind>,
        /// With an oracle, runs whose relative gap exceeds this count as failures.
        #[arg(long, default_value_t = 1e-6)]
        global_tol: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run acceptance criteria and print one verdict per criterion.
    Verify {
        /// Comma-separated criterion numbers; all by default.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            problem,
            solver,
            params,
            sets,
            start,
            lo,
            hi,
            seed,
            time_limit,
            out,
        } => solve(&problem, solver, params.as_deref(), &sets, start, (lo, hi, seed), time_limit, out.as_deref()),
        Command::Bench { config, out_dir, threads } => bench(&config, out_dir, threads),
        Command::Profile {
            dir,
            metric,
            oracle_solver,
            global_tol,
            out_dir,
        } => profile(&dir, metric, oracle_solver, global_tol, out_dir.as_deref()),
        Command::Verify { criteria, threads } => Ok(verify(&criteria, threads)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                BenchError::Config(_) | BenchError::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn read_text(path: &Path) -> Result<String, BenchError> {
    std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn solve(
    problem: &str,
    solver: SolverKind,
    params: Option<&Path>,
    sets: &[String],
    start: StartKind,
    (lo, hi, seed): (f64, f64, u64),
    time_limit: f64,
    out: Option<&Path>,
) -> Result<ExitCode, BenchError> {
    let text = match problem.strip_prefix('@') {
        Some(path) => read_text(Path::new(path))?,
        None => problem.to_string(),
    };
    let spec: ZooSpec = serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("problem: {e}")))?;
    let mut overrides = match params {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(|e| BenchError::Config(format!("params: {e}")))?,
        None => Value::Object(Default::default()),
    };
    for s in sets {
        combine(&mut overrides, parse_assignment(s)?);
    }
    if !(time_limit > 0.0) {
        return Err(BenchError::Config("time limit must be positive".into()));
    }
    let resolved = SolverParams::resolve(solver, &overrides, time_limit)?;
    let rule = match start {
        StartKind::Default => StartRule::Default,
        StartKind::Uniform => StartRule::Uniform { lo, hi },
    };
    let inst = spec.build()?;
    let x0 = starting_point(&rule, &inst.x0, seed, 0);
    let record = run_one(&spec, solver, &resolved, Some(&x0))?;
    eprintln!(
        "{} {}: f = {:.10} residual = {:.2e} status = {} outer = {} inner = {} projections = {}",
        record.problem,
        record.solver,
        record.objective,
        record.residual,
        record.status.name(),
        record.outer_iterations,
        record.inner_iterations,
        record.projections
    );
    let json = serde_json::to_string_pretty(&record)?;
    match out {
        Some(path) => std::fs::write(path, json).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(config: &Path, out_dir: Option<PathBuf>, threads: Option<usize>) -> Result<ExitCode, BenchError> {
    let mut config = BenchConfig::from_json(&read_text(config)?)?;
    if let Some(dir) = out_dir.or_else(|| std::env::var_os(ENV_OUT_DIR).map(PathBuf::from)) {
        config.output_dir = Some(dir);
    }
    if config.output_dir.is_none() {
        return Err(BenchError::Config(format!("no output directory: set output_dir, --out-dir or {ENV_OUT_DIR}")));
    }
    let outcome = run_grid(&config, threads.unwrap_or_else(thread_count))?;
    for f in &outcome.failures {
        eprintln!("run {} ({} {} rep {}) failed: {}", f.index, f.problem, f.solver, f.replication, f.message);
    }
    let failed = outcome.failed_runs();
    eprintln!(
        "{} runs, {} records written to {}, {failed} failed",
        config.run_count(),
        outcome.records.len(),
        config.output_dir.as_deref().unwrap_or(Path::new(".")).display()
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn profile(
    dir: &Path,
    metric: Metric,
    oracle_solver: Option<SolverKind>,
    global_tol: f64,
    out_dir: Option<&Path>,
) -> Result<ExitCode, BenchError> {
    let records = read_runs(dir)?;
    let out_dir = out_dir.unwrap_or(dir);
    let (rule, solvers) = match oracle_solver {
        Some(oracle) => {
            let optimum = optimum_from(&records, oracle);
            let solvers: Vec<_> = records.iter().filter(|r| r.solver != oracle).cloned().collect();
            let gaps = relative_gap_distribution(&solvers, &optimum)?;
            let points: Vec<(String, f64, f64)> = gaps
                .iter()
                .flat_map(|g| g.points().into_iter().map(|(x, y)| (g.solver.clone(), x, y)))
                .collect();
            write_curve_points(&out_dir.join("gaps.csv"), ["solver", "gap", "fraction"], &points)?;
            (FailureRule::MissedGlobal { optimum, tol: global_tol }, solvers)
        }
        None => (FailureRule::NotConverged, records),
    };
    let curves = performance_profile(&solvers, metric, &rule)?;
    let points: Vec<(String, f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points().into_iter().map(|(x, y)| (c.solver.clone(), x, y)))
        .collect();
    let name = match metric {
        Metric::Runtime => "profile_runtime.csv",
        Metric::Projections => "profile_projections.csv",
    };
    write_curve_points(&out_dir.join(name), ["solver", "ratio", "fraction"], &points)?;
    for c in &curves {
        eprintln!(
            "{}: rho(1) = {:.3}, solved {}/{}",
            c.solver,
            c.rho(1.0),
            c.problems - c.failures,
            c.problems
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(criteria: &[u8], threads: Option<usize>) -> ExitCode {
    let ids: Vec<u8> = if criteria.is_empty() { CRITERIA.to_vec() } else { criteria.to_vec() };
    let threads = threads.unwrap_or_else(thread_count);
    let mut failed = 0;
    for id in ids {
        let outcome = run_criterion(id, threads);
        println!("{outcome}");
        if outcome.verdict == Verdict::Fail {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
