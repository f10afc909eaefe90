//! Descent directions `d = −H ∇` for the x-block of the alternating loop.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs with `⟨s, y⟩ ≤ CURVATURE_TOL ‖s‖‖y‖` are discarded.
pub const CURVATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectionKind {
    Gradient,
    Lbfgs { memory: usize },
    /// Polak–Ribière+ with periodic restarts.
    NonlinearCg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionConfig {
    pub kind: DirectionKind,
    pub c1: f64,
    pub c2: f64,
}

impl Default for DirectionConfig {
    fn default() -> Self {
        Self {
            kind: DirectionKind::Lbfgs { memory: 10 },
            c1: 1e-6,
            c2: 1e6,
        }
    }
}

impl DirectionConfig {
    pub fn gradient() -> Self {
        Self {
            kind: DirectionKind::Gradient,
            ..Self::default()
        }
    }

    pub fn lbfgs(memory: usize) -> Self {
        Self {
            kind: DirectionKind::Lbfgs { memory },
            ..Self::default()
        }
    }

    pub fn nonlinear_cg() -> Self {
        Self {
            kind: DirectionKind::NonlinearCg,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 <= self.c2 && self.c2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "safeguard needs 0 < c1 <= c2 < inf, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        if let DirectionKind::Lbfgs { memory: 0 } = self.kind {
            return Err(Error::InvalidParameter("L-BFGS memory must be >= 1".into()));
        }
        Ok(())
    }
}

/// Stateful direction generator owned by a single run.
#[derive(Debug, Clone)]
pub struct DirectionStrategy {
    config: DirectionConfig,
    pairs: VecDeque<(DVector<f64>, DVector<f64>, f64)>,
    prev_grad: Option<DVector<f64>>,
    prev_dir: Option<DVector<f64>>,
    cg_since_restart: usize,
    fallbacks: usize,
}

impl DirectionStrategy {
    pub fn new(config: DirectionConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            pairs: VecDeque::new(),
            prev_grad: None,
            prev_dir: None,
            cg_since_restart: 0,
            fallbacks: 0,
        })
    }

    pub fn config(&self) -> &DirectionConfig {
        &self.config
    }

    /// Forgets curvature pairs and the CG history.
    pub fn reset(&mut self) {
        self.pairs.clear();
        self.prev_grad = None;
        self.prev_dir = None;
        self.cg_since_restart = 0;
    }

    pub fn memory_len(&self) -> usize {
        self.pairs.len()
    }

    /// Number of times the safeguard replaced a direction by `−∇`.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn compute(&mut self, grad: &DVector<f64>) -> Result<DVector<f64>> {
        let gnorm2 = grad.norm_squared();
        if gnorm2 == 0.0 {
            return Err(Error::ZeroGradient);
        }
        let raw = match self.config.kind {
            DirectionKind::Gradient => -grad,
            DirectionKind::Lbfgs { .. } => self.two_loop(grad),
            DirectionKind::NonlinearCg => self.cg_direction(grad),
        };
        let d = if self.acceptable(grad, &raw) {
            raw
        } else {
            self.fallbacks += 1;
            if matches!(self.config.kind, DirectionKind::NonlinearCg) {
                self.cg_since_restart = 0;
            }
            -grad
        };
        if matches!(self.config.kind, DirectionKind::NonlinearCg) {
            self.prev_grad = Some(grad.clone());
            self.prev_dir = Some(d.clone());
            self.cg_since_restart += 1;
        }
        Ok(d)
    }

    fn acceptable(&self, grad: &DVector<f64>, d: &DVector<f64>) -> bool {
        let gnorm2 = grad.norm_squared();
        let descent = -grad.dot(d);
        descent.is_finite()
            && descent >= self.config.c1 * gnorm2
            && d.norm() <= self.config.c2 * gnorm2.sqrt()
    }

    fn two_loop(&self, grad: &DVector<f64>) -> DVector<f64> {
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * s.dot(&q);
            q.axpy(-a, y, 1.0);
            alphas.push(a);
        }
        let scale = match self.pairs.back() {
            Some((s, y, _)) => s.dot(y) / y.norm_squared(),
            None => 1.0,
        };
        q *= scale;
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * y.dot(&q);
            q.axpy(a - b, s, 1.0);
        }
        -q
    }

    fn cg_direction(&mut self, grad: &DVector<f64>) -> DVector<f64> {
        let n = grad.len().max(1);
        match (&self.prev_grad, &self.prev_dir) {
            (Some(gp), Some(dp)) if self.cg_since_restart < n => {
                let beta = (grad.dot(&(grad - gp)) / gp.norm_squared()).max(0.0);
                let d = -grad + beta * dp;
                if grad.dot(&d) < 0.0 {
                    d
                } else {
                    self.cg_since_restart = 0;
                    -grad
                }
            }
            _ => {
                self.cg_since_restart = 0;
                -grad
            }
        }
    }

    /// Offers the step `s` and gradient change `y`; returns whether the pair
    /// was stored. Only L-BFGS keeps pairs.
    pub fn record_pair(&mut self, s: DVector<f64>, y: DVector<f64>) -> bool {
        let DirectionKind::Lbfgs { memory } = self.config.kind else {
            return false;
        };
        let sy = s.dot(&y);
        if !(sy > CURVATURE_TOL * s.norm() * y.norm()) {
            return false;
        }
        if self.pairs.len() == memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }
}
