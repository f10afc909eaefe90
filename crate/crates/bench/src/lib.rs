//! Benchmark harness for the penalty decomposition solvers: solver ×
//! problem grids, performance profiles, relative-gap distributions and the
//! acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod output;
pub mod profile;
pub mod runner;

pub use config::{BenchConfig, GridEntry, SolverParams, StartRule};
pub use error::{BenchError, Result};
pub use profile::{performance_profile, relative_gap, relative_gap_distribution, FailureRule, Metric, ProfileCurve};
pub use runner::{run_grid, run_one, GridOutcome};

/// Environment variable overriding the output directory.
pub const ENV_OUT_DIR: &str = "GEOPD_OUT_DIR";
/// Environment variable setting the number of grid worker threads.
pub const ENV_THREADS: &str = "GEOPD_THREADS";

/// Worker count from [`ENV_THREADS`], else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(ENV_THREADS)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
