//! Outer penalty loop of the inexact penalty decomposition method.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::altmin::{alternating_minimize, AltMinParams};
use crate::direction::{DirectionConfig, DirectionStrategy};
use crate::error::{check_dim, Error, Result};
use crate::penalty::{MultiplierMode, PenaltyObjective, DEFAULT_MULTIPLIER_BOUND};
use crate::problem::Problem;
use crate::record::{Certificate, Iterate, OuterRecord, RunRecord, SolverKind, Status, SCHEMA_VERSION};

/// When the penalty parameter grows between outer iterations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TauUpdate {
    #[default]
    Always,
    /// Grow only when the residual did not shrink below `eta` times the
    /// previous one.
    OnStall { eta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdParams {
    pub tau0: f64,
    pub alpha_tau: f64,
    #[serde(default)]
    pub tau_update: TauUpdate,
    pub tau_cap: f64,
    pub eps_out: f64,
    pub delta0: f64,
    pub delta_decay: f64,
    pub delta_min: f64,
    pub max_outer_iters: usize,
    pub multipliers: MultiplierMode,
    pub multiplier_bound: f64,
    /// `delta` is overwritten by the schedule at every outer iteration.
    pub inner: AltMinParams,
    pub direction: DirectionConfig,
    pub keep_iterates: bool,
    pub time_limit_secs: Option<f64>,
}

impl Default for PdParams {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            alpha_tau: 1.1,
            tau_update: TauUpdate::Always,
            tau_cap: 1e8,
            eps_out: 1e-5,
            delta0: 1.0,
            delta_decay: 0.5,
            delta_min: 1e-8,
            max_outer_iters: 10_000,
            multipliers: MultiplierMode::None,
            multiplier_bound: DEFAULT_MULTIPLIER_BOUND,
            inner: AltMinParams::default(),
            direction: DirectionConfig::default(),
            keep_iterates: false,
            time_limit_secs: None,
        }
    }
}

impl PdParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.tau0 > 0.0) {
            return bad("tau0 must be positive");
        }
        if !(self.alpha_tau > 1.0) {
            return bad("alpha_tau must exceed 1");
        }
        if !(self.tau_cap >= self.tau0) {
            return bad("tau_cap must be at least tau0");
        }
        if !(self.eps_out > 0.0) {
            return bad("eps_out must be positive");
        }
        if !(self.delta0 >= 0.0 && self.delta_min >= 0.0 && self.delta_decay > 0.0 && self.delta_decay <= 1.0) {
            return bad("delta schedule needs delta0, delta_min >= 0 and decay in (0,1]");
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be positive");
        }
        if let TauUpdate::OnStall { eta } = self.tau_update {
            if !(eta > 0.0 && eta < 1.0) {
                return bad("eta must lie in (0,1)");
            }
        }
        self.direction.validate()?;
        self.inner.validate()
    }

    /// `δ_k = max(δ₀ · decay^k, δ_min)`.
    pub fn delta(&self, k: usize) -> f64 {
        (self.delta0 * self.delta_decay.powi(k.min(i32::MAX as usize) as i32)).max(self.delta_min)
    }

    pub fn solver_kind(&self) -> SolverKind {
        if self.multipliers == MultiplierMode::None {
            SolverKind::Pd
        } else {
            SolverKind::Pdlm
        }
    }
}

/// Residuals `(r₁, r₂)` of the stationarity system of the feasibility
/// problem: `r₁ = ‖G'(x)*(G(x) − P_C(G(x))) + x − y‖`, `r₂ = ‖y − Π_D(x)‖`.
pub fn feasibility_stationarity_check(problem: &Problem, x: &DVector<f64>, y: &DVector<f64>) -> Result<(f64, f64)> {
    check_dim("stationarity x", problem.dim(), x.len())?;
    check_dim("stationarity y", problem.dim(), y.len())?;
    let mut v = x - y;
    if let Some(c) = problem.constraint() {
        let g = c.map.value(x);
        let r = &g - c.target.project(&g)?;
        v += c.map.adjoint_apply(x, &r);
    }
    let r2 = (y - problem.set().project(x)?).norm();
    Ok((v.norm(), r2))
}

/// `‖x − y‖ + dist_C(G(x))`.
pub fn pd_residual(problem: &Problem, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let (_, dist) = problem.evaluate_constraints(x)?;
    Ok((x - y).norm() + dist)
}

/// Runs the penalty decomposition method from `(x0, y0)`; `y0` defaults to
/// (and is otherwise projected onto) `D`. Numerical failures inside the
/// loop are reported through the status of the returned record.
pub fn solve_pd(
    problem: &Problem,
    params: &PdParams,
    x0: &DVector<f64>,
    y0: Option<&DVector<f64>>,
) -> Result<RunRecord> {
    params.validate()?;
    check_dim("starting point", problem.dim(), x0.len())?;
    let start = Instant::now();
    let set = problem.set();
    let mut projections = 0usize;
    let mut y = match y0 {
        Some(y0) => {
            check_dim("starting y", problem.dim(), y0.len())?;
            let p = set.project(y0)?;
            projections += 1;
            p
        }
        None => {
            projections += 1;
            set.project(x0)?
        }
    };
    let mut x = x0.clone();
    let mut po = PenaltyObjective::with_multipliers(problem, params.tau0, params.multipliers, params.multiplier_bound)?;
    let mut direction = DirectionStrategy::new(params.direction)?;
    let mut history = Vec::new();
    let mut certificates = Vec::new();
    let mut iterates = Vec::new();
    let mut inner_total = 0usize;
    let mut status = Status::IterationCap;
    let mut message = None;
    let mut tau = params.tau0;
    let mut prev_residual = f64::INFINITY;

    for k in 0..params.max_outer_iters {
        if let Some(limit) = params.time_limit_secs {
            if start.elapsed().as_secs_f64() > limit {
                status = Status::TimeLimit;
                break;
            }
        }
        let delta = params.delta(k);
        let inner = AltMinParams { delta, ..params.inner };
        direction.reset();
        let out = match alternating_minimize(&po, &x, &y, &inner, &mut direction) {
            Ok(out) => out,
            Err(failure) => {
                x = failure.x;
                y = failure.y;
                projections += failure.projections;
                inner_total += failure.iterations;
                status = Status::NumericalFailure;
                message = Some(failure.error.to_string());
                break;
            }
        };
        x = out.x;
        y = out.y;
        projections += out.stats.projections;
        inner_total += out.stats.iterations;

        let cert = match certificate(&po, &x, &y, &out.grad) {
            Ok(c) => c,
            Err(e) => {
                status = Status::NumericalFailure;
                message = Some(e.to_string());
                break;
            }
        };
        let residual = cert.feasibility;
        history.push(OuterRecord {
            tau,
            delta,
            inner_iterations: out.stats.iterations,
            projections: out.stats.projections,
            inner_stop: Some(out.stats.stop),
            f: problem.objective_value(&y).unwrap_or(f64::NAN),
            residual,
            lambda_norm: po.lambda().map_or(0.0, |l| l.norm()),
            mu_norm: po.mu().map_or(0.0, |m| m.norm()),
        });
        certificates.push(Certificate {
            delta,
            inner_stop: out.stats.stop,
            ..cert
        });
        if params.keep_iterates {
            iterates.push(Iterate {
                x: x.as_slice().to_vec(),
                y: y.as_slice().to_vec(),
                q_history: out.stats.q_history.clone(),
            });
        }
        if residual <= params.eps_out {
            status = Status::Converged;
            break;
        }
        if let Err(e) = po.update_multipliers(&x, &y) {
            status = Status::NumericalFailure;
            message = Some(e.to_string());
            break;
        }
        let grow = match params.tau_update {
            TauUpdate::Always => true,
            TauUpdate::OnStall { eta } => residual > eta * prev_residual,
        };
        prev_residual = residual;
        if !grow {
            continue;
        }
        tau *= params.alpha_tau;
        if tau > params.tau_cap {
            status = Status::StationaryOfFeasibilityCandidate;
            break;
        }
        po.set_tau(tau)?;
    }

    let objective = problem.objective_value(&y).unwrap_or(f64::NAN);
    let objective_at_x = problem.objective_value(&x).unwrap_or(f64::NAN);
    let residual = pd_residual(problem, &x, &y).unwrap_or(f64::NAN);
    let constraint_violation = problem.evaluate_constraints(&y).map_or(f64::NAN, |(_, d)| d);
    let feasibility_stationarity = if status == Status::Converged {
        None
    } else {
        feasibility_stationarity_check(problem, &x, &y).ok()
    };
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        problem: problem.name.clone(),
        replication: 0,
        solver: params.solver_kind(),
        params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
        status,
        message,
        point: y.as_slice().to_vec(),
        x: x.as_slice().to_vec(),
        objective,
        objective_at_x,
        residual,
        constraint_violation,
        outer_iterations: history.len(),
        inner_iterations: inner_total,
        projections,
        seconds: start.elapsed().as_secs_f64(),
        history,
        certificates,
        feasibility_stationarity,
        iterates,
    })
}

fn certificate(po: &PenaltyObjective<'_>, x: &DVector<f64>, y: &DVector<f64>, grad: &DVector<f64>) -> Result<Certificate> {
    let problem = po.problem();
    let e = po.evaluate(x, y)?;
    let (lambda, mu) = po.multiplier_estimates(x, y)?;
    let (z_norm, g_lambda) = match problem.constraint() {
        Some(c) => {
            let z = &e.g - c.target.project(&e.g)?;
            (z.norm(), c.map.adjoint_apply(x, &lambda))
        }
        None => (0.0, DVector::zeros(x.len())),
    };
    let rebuilt = &e.grad_f + &g_lambda + &mu;
    let scale = 1f64
        .max(e.grad_f.norm())
        .max(g_lambda.norm())
        .max(mu.norm());
    Ok(Certificate {
        epsilon_norm: grad.norm(),
        z_norm,
        lambda_norm: lambda.norm(),
        mu_norm: mu.norm(),
        identity_residual: (grad - rebuilt).norm() / scale,
        feasibility: (x - y).norm() + z_norm,
        delta: 0.0,
        inner_stop: crate::altmin::InnerStop::IterationCap,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::convex::ConvexTarget;
    use crate::geometric::GeometricSet;
    use crate::problem::{AffineMap, FnObjective, Shape};
    use nalgebra::{dmatrix, dvector};

    fn shifted(a: DVector<f64>, set: GeometricSet) -> Problem {
        let n = a.len();
        Problem::new(
            "shifted",
            Shape::Vector { len: n },
            Arc::new(FnObjective::new(n, move |x: &DVector<f64>| {
                let r = x - &a;
                (0.5 * r.norm_squared(), r)
            })),
            set,
        )
        .unwrap()
    }

    #[test]
    fn unconstrained_converges_in_one_outer_iteration() {
        let a = dvector![1.0, -2.0, 0.5];
        let p = shifted(a.clone(), GeometricSet::WholeSpace { dim: 3 });
        let params = PdParams {
            delta0: 1e-8,
            inner: AltMinParams {
                eps_in: 1e-14,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = solve_pd(&p, &params, &DVector::zeros(3), None).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.outer_iterations, 1);
        assert!((DVector::from_vec(r.point) - a).norm() < 1e-7);
    }

    #[test]
    fn delta_schedule() {
        let p = PdParams::default();
        assert_eq!(p.delta(0), 1.0);
        assert_eq!(p.delta(3), 0.125);
        assert_eq!(p.delta(100), 1e-8);
    }

    #[test]
    fn feasible_point_has_zero_residuals() {
        let p = shifted(dvector![1.0, 0.0], GeometricSet::sparsity(2, 1).unwrap())
            .with_constraint(
                Arc::new(AffineMap {
                    m: dmatrix![1.0, 1.0],
                    b: dvector![0.0],
                }),
                ConvexTarget::new_box(dvector![0.0], dvector![2.0]).unwrap(),
            )
            .unwrap();
        let x = dvector![1.0, 0.0];
        assert_eq!(feasibility_stationarity_check(&p, &x, &x).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn infeasible_instance_is_a_feasibility_candidate() {
        // x ∈ {‖x‖₀ ≤ 1} and x = (2, 2): dist² = 4 at any 1-sparse best point
        let p = shifted(dvector![0.0, 0.0], GeometricSet::sparsity(2, 1).unwrap())
            .with_constraint(
                Arc::new(AffineMap {
                    m: nalgebra::DMatrix::identity(2, 2),
                    b: dvector![2.0, 2.0],
                }),
                ConvexTarget::SingletonZero { dim: 2 },
            )
            .unwrap();
        let params = PdParams {
            tau0: 1.0,
            alpha_tau: 2.0,
            tau_cap: 1e8,
            inner: AltMinParams {
                eps_in: 1e-12,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = solve_pd(&p, &params, &dvector![1.0, 0.5], None).unwrap();
        assert_eq!(r.status, Status::StationaryOfFeasibilityCandidate);
        let (r1, r2) = r.feasibility_stationarity.unwrap();
        assert!(r1 <= 1e-4 && r2 <= 1e-4, "{r1} {r2}");
        assert!(r.residual > 0.5);
        assert!((DVector::from_vec(r.point) - dvector![2.0, 0.0]).norm() < 1e-3);
    }
}
