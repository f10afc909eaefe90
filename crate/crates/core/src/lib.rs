//! Solvers for `min f(x) s.t. G(x) ∈ C, x ∈ D` where `D` is a closed,
//! possibly nonconvex set that is only accessed through its projection.
//!
//! The main entry points are [`pd::solve_pd`] (inexact penalty decomposition,
//! optionally with safeguarded multipliers) and [`alm::solve_alm`] (an
//! augmented Lagrangian method with a projected spectral-gradient inner
//! solver).

pub mod alm;
pub mod altmin;
pub mod convex;
pub mod direction;
pub mod error;
pub mod geometric;
pub mod linalg;
pub mod linesearch;
pub mod nnls;
pub mod pd;
pub mod penalty;
pub mod problem;
pub mod record;

pub use convex::ConvexTarget;
pub use error::{Error, Result};
pub use geometric::{BoxSwitching, GeometricSet, Polyhedron};
pub use problem::{ConstraintMap, ExactMode, ExactXUpdate, Objective, Problem, Shape};
pub use alm::{solve_alm, AlmParams, SpectralParams};
pub use altmin::{alternating_minimize, AltMinParams, InnerStop};
pub use direction::{DirectionConfig, DirectionKind, DirectionStrategy};
pub use linesearch::LineSearchParams;
pub use pd::{feasibility_stationarity_check, solve_pd, PdParams, TauUpdate};
pub use penalty::{MultiplierMode, PenaltyObjective};
pub use record::{RunRecord, SolverKind, Status};
