//! Inexact alternating minimization of `q_τ(x, y)` over `x` and `y ∈ D`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::direction::DirectionStrategy;
use crate::error::{Error, Result};
use crate::linesearch::{armijo_search, LineSearchParams};
use crate::penalty::PenaltyObjective;
use crate::problem::ExactMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltMinParams {
    /// Gradient-norm tolerance `δ`.
    pub delta: f64,
    /// Stop when `q` decreases by at most this much in one iteration.
    pub eps_in: f64,
    pub max_inner_iters: usize,
    pub line_search: LineSearchParams,
    /// Descent steps per x-block before the projection.
    pub steps_per_block: usize,
    /// Gradient tolerance ending an x-block early when `steps_per_block > 1`.
    pub eps_solv: f64,
    /// Abort when `q` drops below this value.
    pub q_floor: f64,
    /// Use the problem's closed-form x-update when present.
    pub exact: Option<ExactMode>,
}

impl Default for AltMinParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            eps_in: 1e-5,
            max_inner_iters: 10_000,
            line_search: LineSearchParams::default(),
            steps_per_block: 1,
            eps_solv: 0.0,
            q_floor: -1e12,
            exact: None,
        }
    }
}

impl AltMinParams {
    pub fn validate(&self) -> Result<()> {
        self.line_search.validate()?;
        if !(self.delta >= 0.0) || !(self.eps_in > 0.0) || self.max_inner_iters == 0 || self.steps_per_block == 0 {
            return Err(Error::InvalidParameter(
                "inner loop needs delta >= 0, eps_in > 0, max_inner_iters >= 1, steps_per_block >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStop {
    /// `‖∇_x q‖ ≤ δ`.
    Gradient,
    /// `q` decreased by at most `eps_in`.
    Decrease,
    IterationCap,
    /// The line search failed with a slope at rounding level.
    StepTooSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltMinStats {
    pub iterations: usize,
    pub projections: usize,
    pub descent_steps: usize,
    pub backtracks: usize,
    pub stop: InnerStop,
    /// `q` at the start and after each completed iteration.
    pub q_history: Vec<f64>,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct AltMinOutput {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub q: f64,
    pub grad: DVector<f64>,
    pub stats: AltMinStats,
}

/// Failure inside the loop together with the last accepted iterate.
#[derive(Debug, Clone)]
pub struct AltMinFailure {
    pub error: Error,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub projections: usize,
    pub iterations: usize,
}

pub fn alternating_minimize(
    po: &PenaltyObjective<'_>,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    params: &AltMinParams,
    direction: &mut DirectionStrategy,
) -> std::result::Result<AltMinOutput, AltMinFailure> {
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut projections = 0;
    let mut iterations = 0;
    macro_rules! fail {
        ($e:expr) => {
            return Err(AltMinFailure {
                error: $e,
                x,
                y,
                projections,
                iterations,
            })
        };
    }
    if let Err(e) = params.validate() {
        fail!(e);
    }
    let (mut q, mut grad) = match po.value_and_xgrad(&x, &y) {
        Ok(v) => v,
        Err(e) => fail!(e),
    };
    let mut stats = AltMinStats {
        iterations: 0,
        projections: 0,
        descent_steps: 0,
        backtracks: 0,
        stop: InnerStop::IterationCap,
        q_history: vec![q],
        grad_norm: grad.norm(),
    };
    let exact = params.exact.and_then(|m| po.problem().exact_update().map(|u| (u.clone(), m)));

    loop {
        if grad.norm() <= params.delta {
            stats.stop = InnerStop::Gradient;
            break;
        }
        if iterations >= params.max_inner_iters {
            stats.stop = InnerStop::IterationCap;
            break;
        }
        let q_prev = q;

        if let Some((update, mode)) = &exact {
            x = match update.minimize(&y, po.tau(), po.lambda(), po.mu(), *mode) {
                Ok(v) => v,
                Err(e) => fail!(e),
            };
        } else {
            let mut stalled = false;
            let mut block_steps = 0;
            for step in 0..params.steps_per_block {
                if step > 0 && grad.norm() <= params.eps_solv.max(params.delta) {
                    break;
                }
                let d = match direction.compute(&grad) {
                    Ok(d) => d,
                    Err(Error::ZeroGradient) => break,
                    Err(e) => fail!(e),
                };
                let slope = grad.dot(&d);
                let mut trial_grad = None;
                let mut evals = 0usize;
                let search = armijo_search(
                    |alpha| {
                        evals += 1;
                        let xt = &x + alpha * &d;
                        let (qt, gt) = po.value_and_xgrad(&xt, &y)?;
                        trial_grad = Some(gt);
                        Ok(qt)
                    },
                    q,
                    slope,
                    1.0,
                    &params.line_search,
                );
                stats.backtracks += evals.saturating_sub(1);
                match search {
                    Ok((alpha, qn)) => {
                        let gn = trial_grad.take().expect("accepted trial has a gradient");
                        let s = alpha * &d;
                        x += &s;
                        direction.record_pair(s, &gn - &grad);
                        q = qn;
                        grad = gn;
                        stats.descent_steps += 1;
                        block_steps += 1;
                    }
                    Err(Error::LineSearchFailed { .. }) if slope.abs() <= 1e-12 * q.abs().max(1.0) => {
                        stalled = true;
                        break;
                    }
                    Err(e) => fail!(e),
                }
            }
            if stalled && block_steps == 0 {
                stats.stop = InnerStop::StepTooSmall;
                break;
            }
        }

        y = match po.y_subproblem(&x) {
            Ok(v) => v,
            Err(e) => fail!(e),
        };
        projections += 1;
        iterations += 1;
        match po.value_and_xgrad(&x, &y) {
            Ok((qn, gn)) => {
                q = qn;
                grad = gn;
            }
            Err(e) => fail!(e),
        }
        if q < params.q_floor {
            fail!(Error::Diverged(q));
        }
        stats.q_history.push(q);
        if q_prev - q <= params.eps_in {
            stats.stop = InnerStop::Decrease;
            break;
        }
    }
    stats.iterations = iterations;
    stats.projections = projections;
    stats.grad_norm = grad.norm();
    Ok(AltMinOutput { x, y, q, grad, stats })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::direction::DirectionConfig;
    use crate::geometric::GeometricSet;
    use crate::problem::{FnObjective, Problem, Shape};
    use nalgebra::dvector;

    fn shifted_quadratic(a: DVector<f64>, set: GeometricSet) -> Problem {
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
    fn unconstrained_quadratic_goes_to_origin() {
        let p = shifted_quadratic(dvector![0.0, 0.0], GeometricSet::WholeSpace { dim: 2 });
        let po = PenaltyObjective::new(&p, 1.0).unwrap();
        let params = AltMinParams {
            delta: 1e-10,
            eps_in: 1e-14,
            ..Default::default()
        };
        let mut dir = DirectionStrategy::new(DirectionConfig::lbfgs(5)).unwrap();
        let x0 = dvector![4.0, 4.0];
        let out = alternating_minimize(&po, &x0, &x0, &params, &mut dir).unwrap();
        assert!(out.x.norm() < 1e-5 && out.y.norm() < 1e-5);
        assert!(out.q < 1e-10);
        assert_eq!(out.stats.projections, out.stats.iterations);
    }

    #[test]
    fn sparse_target_with_large_tau() {
        let p = shifted_quadratic(dvector![3.0, 0.1], GeometricSet::sparsity(2, 1).unwrap());
        let po = PenaltyObjective::new(&p, 1e6).unwrap();
        let params = AltMinParams {
            delta: 1e-9,
            eps_in: 1e-14,
            ..Default::default()
        };
        let mut dir = DirectionStrategy::new(DirectionConfig::lbfgs(5)).unwrap();
        let x0 = dvector![3.0, 0.0];
        let out = alternating_minimize(&po, &x0, &x0, &params, &mut dir).unwrap();
        assert!((&out.y - dvector![3.0, 0.0]).norm() < 1e-9);
        assert!((&out.x - dvector![3.0, 0.0]).norm() < 1e-6);
    }

    #[test]
    fn immediate_gradient_stop() {
        let p = shifted_quadratic(dvector![1.0], GeometricSet::WholeSpace { dim: 1 });
        let po = PenaltyObjective::new(&p, 1.0).unwrap();
        let mut dir = DirectionStrategy::new(DirectionConfig::gradient()).unwrap();
        let x0 = dvector![1.0];
        let out = alternating_minimize(&po, &x0, &x0, &AltMinParams::default(), &mut dir).unwrap();
        assert_eq!(out.stats.iterations, 0);
        assert_eq!(out.stats.projections, 0);
        assert_eq!(out.stats.stop, InnerStop::Gradient);
    }

    #[test]
    fn q_sequence_is_monotone() {
        let p = shifted_quadratic(dvector![3.0, -2.0, 0.5, 1.0], GeometricSet::sparsity(4, 2).unwrap());
        let po = PenaltyObjective::new(&p, 0.5).unwrap();
        let params = AltMinParams {
            delta: 0.0,
            eps_in: 1e-12,
            max_inner_iters: 200,
            ..Default::default()
        };
        let mut dir = DirectionStrategy::new(DirectionConfig::gradient()).unwrap();
        let x0 = dvector![-5.0, 5.0, 5.0, -5.0];
        let y0 = p.set().project(&x0).unwrap();
        let out = alternating_minimize(&po, &x0, &y0, &params, &mut dir).unwrap();
        for w in out.stats.q_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(p.set().project(&out.y).unwrap(), out.y);
    }

    #[test]
    fn floor_aborts_unbounded_problem() {
        let p = Problem::new(
            "linear",
            Shape::Vector { len: 1 },
            Arc::new(FnObjective::new(1, |x: &DVector<f64>| (-1e6 * x[0], dvector![-1e6]))),
            GeometricSet::WholeSpace { dim: 1 },
        )
        .unwrap();
        let po = PenaltyObjective::new(&p, 1e-9).unwrap();
        let params = AltMinParams {
            delta: 0.0,
            q_floor: -1e3,
            ..Default::default()
        };
        let mut dir = DirectionStrategy::new(DirectionConfig::gradient()).unwrap();
        let x0 = dvector![0.0];
        let err = alternating_minimize(&po, &x0, &x0, &params, &mut dir).unwrap_err();
        assert!(matches!(err.error, Error::Diverged(_)));
    }
}
