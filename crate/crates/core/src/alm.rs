//! Safeguarded augmented Lagrangian baseline with a projected nonmonotone
//! spectral gradient inner solver working directly on `x ∈ D`.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::geometric::GeometricSet;
use crate::penalty::{clamp, DEFAULT_MULTIPLIER_BOUND};
use crate::problem::Problem;
use crate::record::{OuterRecord, RunRecord, SolverKind, Status, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub sigma: f64,
    pub gamma0: f64,
    pub gamma_max: f64,
    /// Nonmonotonicity window.
    pub memory: usize,
    pub step_growth: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            sigma: 1e-5,
            gamma0: 1.0,
            gamma_max: 1e12,
            memory: 10,
            step_growth: 2.0,
        }
    }
}

impl SpectralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0
            && self.gamma0 > 0.0
            && self.gamma0 <= self.gamma_max
            && self.memory >= 1
            && self.step_growth > 1.0)
        {
            return Err(Error::InvalidParameter(
                "spectral parameters need sigma > 0, 0 < gamma0 <= gamma_max, memory >= 1, growth > 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmParams {
    pub tau0: f64,
    pub alpha_tau: f64,
    pub tau_cap: f64,
    pub eps_out: f64,
    pub eps_in: f64,
    pub eta: f64,
    pub multiplier_bound: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub spectral: SpectralParams,
    pub time_limit_secs: Option<f64>,
}

impl Default for AlmParams {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            alpha_tau: 1.1,
            tau_cap: 1e8,
            eps_out: 1e-5,
            eps_in: 1e-5,
            eta: 0.8,
            multiplier_bound: DEFAULT_MULTIPLIER_BOUND,
            max_outer_iters: 10_000,
            max_inner_iters: 10_000,
            spectral: SpectralParams::default(),
            time_limit_secs: None,
        }
    }
}

impl AlmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0
            && self.alpha_tau > 1.0
            && self.tau_cap >= self.tau0
            && self.eps_out > 0.0
            && self.eps_in > 0.0
            && self.eta > 0.0
            && self.eta < 1.0
            && self.multiplier_bound > 0.0
            && self.max_outer_iters > 0
            && self.max_inner_iters > 0)
        {
            return Err(Error::InvalidParameter("invalid ALM parameters".into()));
        }
        self.spectral.validate()
    }
}

/// `L(x) = f(x) + (τ/2) dist_C²(G(x) + λ/τ) − ‖λ‖²/(2τ)` and its gradient.
pub struct AugmentedLagrangian<'a> {
    pub problem: &'a Problem,
    pub tau: f64,
    pub lambda: Option<DVector<f64>>,
}

impl AugmentedLagrangian<'_> {
    pub fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (mut l, mut grad) = self.problem.evaluate_objective(x)?;
        if let Some(c) = self.problem.constraint() {
            let g = c.map.value(x);
            check_finite("constraint value", g.as_slice())?;
            let w = match &self.lambda {
                Some(lam) => &g + lam / self.tau,
                None => g,
            };
            let r = &w - c.target.project(&w)?;
            l += 0.5 * self.tau * r.norm_squared();
            if let Some(lam) = &self.lambda {
                l -= lam.norm_squared() / (2.0 * self.tau);
            }
            grad += self.tau * c.map.adjoint_apply(x, &r);
        }
        if !l.is_finite() {
            return Err(Error::NonFinite("augmented Lagrangian value"));
        }
        check_finite("augmented Lagrangian gradient", grad.as_slice())?;
        Ok((l, grad))
    }
}

/// Mutable state of the spectral gradient iteration.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub gamma_bb: f64,
    /// Most recent objective values, newest last.
    pub values: VecDeque<f64>,
    pub projections: usize,
}

impl SpectralState {
    pub fn new(params: &SpectralParams, l0: f64) -> Self {
        Self {
            gamma_bb: params.gamma0,
            values: VecDeque::from([l0]),
            projections: 0,
        }
    }

    fn reference(&self, memory: usize) -> f64 {
        self.values
            .iter()
            .rev()
            .take(memory)
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted {
        x: DVector<f64>,
        value: f64,
        grad: DVector<f64>,
    },
    Stalled,
}

/// One projected spectral step from `x ∈ D` with gradient `g`.
pub fn spectral_step<F>(
    mut oracle: F,
    set: &GeometricSet,
    x: &DVector<f64>,
    g: &DVector<f64>,
    state: &mut SpectralState,
    params: &SpectralParams,
) -> Result<StepOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    let reference = state.reference(params.memory);
    let mut gamma = state.gamma_bb.clamp(params.gamma0, params.gamma_max);
    while gamma <= params.gamma_max {
        let xp = set.project(&(x - g / gamma))?;
        state.projections += 1;
        if xp == *x {
            return Ok(StepOutcome::Stalled);
        }
        let step = (&xp - x).norm_squared();
        let accepted = match oracle(&xp) {
            Ok((lp, gp)) if lp <= reference - params.sigma * step => Some((lp, gp)),
            Ok(_) | Err(Error::NonFinite(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some((lp, gp)) = accepted {
            let s = &xp - x;
            let yv = &gp - g;
            let ss = s.norm_squared();
            let sy = s.dot(&yv);
            state.gamma_bb = if sy > 1e-12 * ss {
                (sy / ss).clamp(params.gamma0, params.gamma_max)
            } else {
                params.gamma0
            };
            state.values.push_back(lp);
            while state.values.len() > params.memory + 1 {
                state.values.pop_front();
            }
            return Ok(StepOutcome::Accepted {
                x: xp,
                value: lp,
                grad: gp,
            });
        }
        gamma *= params.step_growth;
    }
    Ok(StepOutcome::Stalled)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralStop {
    Window,
    Stalled,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct SpectralOutput {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub projections: usize,
    pub stop: SpectralStop,
}

/// Minimizes the oracle over `D` from `x0 ∈ D` until the window criterion
/// `max(last m values before) − min(last m+1 values) ≤ eps_in` holds.
pub fn spectral_solve<F>(
    mut oracle: F,
    set: &GeometricSet,
    x0: &DVector<f64>,
    params: &SpectralParams,
    eps_in: f64,
    max_iters: usize,
) -> Result<SpectralOutput>
where
    F: FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    let (mut l, mut g) = oracle(x0)?;
    let mut x = x0.clone();
    let mut state = SpectralState::new(params, l);
    let mut iterations = 0;
    let stop = loop {
        if iterations >= max_iters {
            break SpectralStop::IterationCap;
        }
        let previous_max = state.reference(params.memory);
        match spectral_step(&mut oracle, set, &x, &g, &mut state, params)? {
            StepOutcome::Stalled => break SpectralStop::Stalled,
            StepOutcome::Accepted { x: xn, value, grad } => {
                x = xn;
                l = value;
                g = grad;
                iterations += 1;
                let window_min = state
                    .values
                    .iter()
                    .rev()
                    .take(params.memory + 1)
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                if previous_max - window_min <= eps_in {
                    break SpectralStop::Window;
                }
            }
        }
    };
    Ok(SpectralOutput {
        x,
        value: l,
        iterations,
        projections: state.projections,
        stop,
    })
}

/// Runs the augmented Lagrangian method from `Π_D(x0)`.
pub fn solve_alm(problem: &Problem, params: &AlmParams, x0: &DVector<f64>) -> Result<RunRecord> {
    params.validate()?;
    check_dim("starting point", problem.dim(), x0.len())?;
    let start = Instant::now();
    let set = problem.set();
    let mut x = set.project(x0)?;
    let mut projections = 1usize;
    let m = problem.constraint().map_or(0, |c| c.target.dim());
    let mut lambda = (m > 0).then(|| DVector::<f64>::zeros(m));
    let mut tau = params.tau0;
    let mut previous_v: Option<f64> = None;
    let mut history = Vec::new();
    let mut inner_total = 0usize;
    let mut status = Status::IterationCap;
    let mut message = None;

    for _ in 0..params.max_outer_iters {
        if let Some(limit) = params.time_limit_secs {
            if start.elapsed().as_secs_f64() > limit {
                status = Status::TimeLimit;
                break;
            }
        }
        let al = AugmentedLagrangian {
            problem,
            tau,
            lambda: lambda.clone(),
        };
        let out = match spectral_solve(
            |z| al.value_and_gradient(z),
            set,
            &x,
            &params.spectral,
            params.eps_in,
            params.max_inner_iters,
        ) {
            Ok(o) => o,
            Err(e) => {
                status = Status::NumericalFailure;
                message = Some(e.to_string());
                break;
            }
        };
        x = out.x;
        projections += out.projections;
        inner_total += out.iterations;
        let (g, dist) = match problem.evaluate_constraints(&x) {
            Ok(v) => v,
            Err(e) => {
                status = Status::NumericalFailure;
                message = Some(e.to_string());
                break;
            }
        };
        history.push(OuterRecord {
            tau,
            delta: 0.0,
            inner_iterations: out.iterations,
            projections: out.projections,
            inner_stop: None,
            f: problem.objective_value(&x).unwrap_or(f64::NAN),
            residual: dist,
            lambda_norm: lambda.as_ref().map_or(0.0, |l| l.norm()),
            mu_norm: 0.0,
        });
        if dist <= params.eps_out {
            status = Status::Converged;
            break;
        }
        let c = problem.constraint().expect("positive distance needs a constraint");
        let lam = lambda.clone().unwrap_or_else(|| DVector::zeros(m));
        let w = &g + &lam / tau;
        let pw = c.target.project(&w)?;
        let v = (&g - &pw).norm();
        lambda = Some(clamp(tau * (&w - &pw), params.multiplier_bound));
        if previous_v.is_some_and(|pv| v > params.eta * pv) {
            tau *= params.alpha_tau;
        }
        previous_v = Some(v);
        if tau > params.tau_cap {
            status = Status::StationaryOfFeasibilityCandidate;
            break;
        }
    }

    let objective = problem.objective_value(&x).unwrap_or(f64::NAN);
    let constraint_violation = problem.evaluate_constraints(&x).map_or(f64::NAN, |(_, d)| d);
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        problem: problem.name.clone(),
        replication: 0,
        solver: SolverKind::Alm,
        params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
        status,
        message,
        point: x.as_slice().to_vec(),
        x: x.as_slice().to_vec(),
        objective,
        objective_at_x: objective,
        residual: constraint_violation,
        constraint_violation,
        outer_iterations: history.len(),
        inner_iterations: inner_total,
        projections,
        seconds: start.elapsed().as_secs_f64(),
        history,
        certificates: Vec::new(),
        feasibility_stationarity: None,
        iterates: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{FnObjective, Shape};
    use nalgebra::dvector;

    fn scaled(q: f64, a: DVector<f64>, set: GeometricSet) -> Problem {
        let n = a.len();
        Problem::new(
            "scaled",
            Shape::Vector { len: n },
            Arc::new(FnObjective::new(n, move |x: &DVector<f64>| {
                let r = x - &a;
                (0.5 * q * r.norm_squared(), q * r)
            })),
            set,
        )
        .unwrap()
    }

    #[test]
    fn exact_step_on_unit_quadratic() {
        let set = GeometricSet::WholeSpace { dim: 1 };
        let p = scaled(1.0, dvector![0.0], set.clone());
        let x = dvector![4.0];
        let oracle = |z: &DVector<f64>| p.evaluate_objective(z);
        let (l, g) = oracle(&x).unwrap();
        let params = SpectralParams::default();
        let mut state = SpectralState::new(&params, l);
        match spectral_step(oracle, &set, &x, &g, &mut state, &params).unwrap() {
            StepOutcome::Accepted { x, .. } => assert_eq!(x, dvector![0.0]),
            StepOutcome::Stalled => panic!("stalled"),
        }
    }

    #[test]
    fn bb_coefficient_matches_curvature() {
        let set = GeometricSet::WholeSpace { dim: 1 };
        let p = scaled(4.0, dvector![0.0], set.clone());
        let x = dvector![1.0];
        let (l, g) = p.evaluate_objective(&x).unwrap();
        let params = SpectralParams::default();
        let mut state = SpectralState::new(&params, l);
        let out = spectral_step(|z| p.evaluate_objective(z), &set, &x, &g, &mut state, &params).unwrap();
        assert!(matches!(out, StepOutcome::Accepted { .. }));
        assert!((state.gamma_bb - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_stalls() {
        let set = GeometricSet::sparsity(2, 1).unwrap();
        let p = scaled(1.0, dvector![3.0, 0.0], set.clone());
        let x = dvector![3.0, 0.0];
        let (l, g) = p.evaluate_objective(&x).unwrap();
        let params = SpectralParams::default();
        let mut state = SpectralState::new(&params, l);
        let out = spectral_step(|z| p.evaluate_objective(z), &set, &x, &g, &mut state, &params).unwrap();
        assert!(matches!(out, StepOutcome::Stalled));
    }

    #[test]
    fn unconstrained_alm_finds_sparse_global() {
        let set = GeometricSet::sparsity(2, 1).unwrap();
        let p = scaled(1.0, dvector![3.0, 0.1], set);
        let r = solve_alm(&p, &AlmParams::default(), &dvector![0.0, 5.0]).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.outer_iterations, 1);
        assert!((DVector::from_vec(r.point) - dvector![3.0, 0.0]).norm() < 1e-6);
    }
}
