//! Serializable result of one solver run.

use serde::{Deserialize, Serialize};

use crate::altmin::InnerStop;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Pd,
    Pdlm,
    Alm,
    /// Exhaustive enumeration on small instances.
    EnumerationOracle,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pd => "pd",
            SolverKind::Pdlm => "pdlm",
            SolverKind::Alm => "alm",
            SolverKind::EnumerationOracle => "enumeration_oracle",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pd" => Ok(SolverKind::Pd),
            "pdlm" => Ok(SolverKind::Pdlm),
            "alm" => Ok(SolverKind::Alm),
            "enumeration_oracle" | "enumeration-oracle" | "oracle" => Ok(SolverKind::EnumerationOracle),
            other => Err(format!("unknown solver '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    /// Penalty cap reached while still infeasible; the stationarity
    /// residuals of the feasibility problem are attached.
    StationaryOfFeasibilityCandidate,
    IterationCap,
    TimeLimit,
    NumericalFailure,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::StationaryOfFeasibilityCandidate => "stationary_of_feasibility_candidate",
            Status::IterationCap => "iteration_cap",
            Status::TimeLimit => "time_limit",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub tau: f64,
    pub delta: f64,
    pub inner_iterations: usize,
    pub projections: usize,
    pub inner_stop: Option<InnerStop>,
    pub f: f64,
    /// `‖x − y‖ + dist_C(G(x))` for the penalty methods, `dist_C(G(x))` for ALM.
    pub residual: f64,
    pub lambda_norm: f64,
    pub mu_norm: f64,
}

/// Stationarity certificate after one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub epsilon_norm: f64,
    pub z_norm: f64,
    pub lambda_norm: f64,
    pub mu_norm: f64,
    /// `‖ε − (∇f + G'*λ + μ)‖ / max(1, ‖∇f‖, ‖G'*λ‖, ‖μ‖)`.
    pub identity_residual: f64,
    pub feasibility: f64,
    pub delta: f64,
    pub inner_stop: InnerStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub q_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub problem: String,
    /// Index of the run among repeated runs of the same configuration.
    #[serde(default)]
    pub replication: usize,
    pub solver: SolverKind,
    pub params: serde_json::Value,
    pub status: Status,
    pub message: Option<String>,
    /// Final point in `D`.
    pub point: Vec<f64>,
    /// Final x-block (equals `point` for ALM).
    pub x: Vec<f64>,
    /// `f` at `point`.
    pub objective: f64,
    pub objective_at_x: f64,
    pub residual: f64,
    /// `dist_C(G(point))`.
    pub constraint_violation: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub projections: usize,
    pub seconds: f64,
    pub history: Vec<OuterRecord>,
    pub certificates: Vec<Certificate>,
    /// `(r₁, r₂)` for the feasibility problem when the run did not converge.
    pub feasibility_stationarity: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterates: Vec<Iterate>,
}

impl RunRecord {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn succeeded(&self) -> bool {
        self.status == Status::Converged
    }
}
