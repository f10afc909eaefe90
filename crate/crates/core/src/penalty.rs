//! The partial penalty `q_τ(x, y)` and its multiplier-shifted variant.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::problem::Problem;

pub const DEFAULT_MULTIPLIER_BOUND: f64 = 1e8;

/// Which safeguarded multipliers are carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierMode {
    #[default]
    None,
    /// `λ` for `G(x) ∈ C`.
    ConstraintsOnly,
    /// `μ` for `x = y`.
    EqualityOnly,
    Both,
}

impl MultiplierMode {
    pub fn uses_lambda(self) -> bool {
        matches!(self, MultiplierMode::ConstraintsOnly | MultiplierMode::Both)
    }

    pub fn uses_mu(self) -> bool {
        matches!(self, MultiplierMode::EqualityOnly | MultiplierMode::Both)
    }
}

/// Value, x-gradient and the intermediate quantities of one evaluation.
#[derive(Debug, Clone)]
pub struct PenaltyEval {
    pub q: f64,
    pub grad: DVector<f64>,
    pub f: f64,
    pub grad_f: DVector<f64>,
    /// `G(x)`; empty without a constraint.
    pub g: DVector<f64>,
    /// `w − P_C(w)` with `w = G(x) + λ/τ`.
    pub shifted_residual: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct PenaltyObjective<'a> {
    problem: &'a Problem,
    tau: f64,
    mode: MultiplierMode,
    lambda: Option<DVector<f64>>,
    mu: Option<DVector<f64>>,
    bound: f64,
}

impl<'a> PenaltyObjective<'a> {
    pub fn new(problem: &'a Problem, tau: f64) -> Result<Self> {
        Self::with_multipliers(problem, tau, MultiplierMode::None, DEFAULT_MULTIPLIER_BOUND)
    }

    pub fn with_multipliers(problem: &'a Problem, tau: f64, mode: MultiplierMode, bound: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if !(bound > 0.0) {
            return Err(Error::InvalidParameter(format!("multiplier bound must be positive, got {bound}")));
        }
        let m = problem.constraint().map_or(0, |c| c.target.dim());
        let lambda = (mode.uses_lambda() && m > 0).then(|| DVector::zeros(m));
        let mu = mode.uses_mu().then(|| DVector::zeros(problem.dim()));
        Ok(Self {
            problem,
            tau,
            mode,
            lambda,
            mu,
            bound,
        })
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn set_tau(&mut self, tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        self.tau = tau;
        Ok(())
    }

    pub fn mode(&self) -> MultiplierMode {
        self.mode
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lambda(&self) -> Option<&DVector<f64>> {
        self.lambda.as_ref()
    }

    pub fn mu(&self) -> Option<&DVector<f64>> {
        self.mu.as_ref()
    }

    /// Overwrites the multipliers, clamping them into `[−B, B]`.
    pub fn set_multipliers(&mut self, lambda: Option<DVector<f64>>, mu: Option<DVector<f64>>) -> Result<()> {
        if let Some(l) = lambda {
            let m = self.problem.constraint().map_or(0, |c| c.target.dim());
            check_dim("lambda", m, l.len())?;
            self.lambda = Some(clamp(l, self.bound));
        }
        if let Some(u) = mu {
            check_dim("mu", self.problem.dim(), u.len())?;
            self.mu = Some(clamp(u, self.bound));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<PenaltyEval> {
        let n = self.problem.dim();
        check_dim("penalty y", n, y.len())?;
        let (f, grad_f) = self.problem.evaluate_objective_unchecked(x)?;
        let tau = self.tau;
        let diff = x - y;
        let mut q = f + 0.5 * tau * diff.norm_squared();
        let mut grad = grad_f.clone();
        grad.axpy(tau, &diff, 1.0);
        if let Some(mu) = &self.mu {
            q += mu.dot(&diff);
            grad += mu;
        }
        let (g, shifted_residual) = match self.problem.constraint() {
            None => (DVector::zeros(0), DVector::zeros(0)),
            Some(c) => {
                let g = c.map.value(x);
                check_finite("constraint value", g.as_slice())?;
                let w = match &self.lambda {
                    Some(l) => &g + l / tau,
                    None => g.clone(),
                };
                let r = &w - c.target.project(&w)?;
                q += 0.5 * tau * r.norm_squared();
                if let Some(l) = &self.lambda {
                    q -= l.norm_squared() / (2.0 * tau);
                }
                grad.axpy(tau, &c.map.adjoint_apply(x, &r), 1.0);
                (g, r)
            }
        };
        if !q.is_finite() {
            return Err(Error::NonFinite("penalty value"));
        }
        check_finite("penalty gradient", grad.as_slice())?;
        Ok(PenaltyEval {
            q,
            grad,
            f,
            grad_f,
            g,
            shifted_residual,
        })
    }

    pub fn value_and_xgrad(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        self.evaluate(x, y).map(|e| (e.q, e.grad))
    }

    /// The point whose projection onto `D` minimizes `q(x, ·)`.
    pub fn y_target(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.mu {
            Some(mu) => x + mu / self.tau,
            None => x.clone(),
        }
    }

    /// Exact minimizer of `q(x, ·)` over `D`.
    pub fn y_subproblem(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.problem.set().project(&self.y_target(x))
    }

    /// Unclamped multiplier estimates `(τ(w − P_C w), μ + τ(x − y))`.
    pub fn multiplier_estimates(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let e = self.evaluate(x, y)?;
        let lambda = self.tau * &e.shifted_residual;
        let mut mu = self.tau * (x - y);
        if let Some(m) = &self.mu {
            mu += m;
        }
        Ok((lambda, mu))
    }

    /// Safeguarded first-order multiplier update for the carried multipliers.
    pub fn update_multipliers(&mut self, x: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        if self.mode == MultiplierMode::None {
            return Ok(());
        }
        let (lambda, mu) = self.multiplier_estimates(x, y)?;
        if self.lambda.is_some() {
            self.lambda = Some(clamp(lambda, self.bound));
        }
        if self.mu.is_some() {
            self.mu = Some(clamp(mu, self.bound));
        }
        Ok(())
    }
}

pub(crate) fn clamp(v: DVector<f64>, bound: f64) -> DVector<f64> {
    v.map(|t| t.clamp(-bound, bound))
}
