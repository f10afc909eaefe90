//! Armijo backtracking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    pub gamma: f64,
    pub beta: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            gamma: 1e-4,
            beta: 0.5,
            max_backtracks: 60,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.gamma) || !open(self.beta) {
            return Err(Error::InvalidParameter(format!(
                "line search needs gamma, beta in (0,1), got {} and {}",
                self.gamma, self.beta
            )));
        }
        Ok(())
    }
}

/// Returns `(α, q(α))` for `α = α₀β^j` with the smallest `j ≥ 0` such that
/// `q(α) ≤ q0 + γ α slope`. Non-finite trial values are rejected.
pub fn armijo_search<F>(mut eval: F, q0: f64, slope: f64, alpha0: f64, params: &LineSearchParams) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    params.validate()?;
    if !(slope < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "line search needs a descent slope, got {slope}"
        )));
    }
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial step must be positive, got {alpha0}")));
    }
    let mut alpha = alpha0;
    for _ in 0..=params.max_backtracks {
        let q = match eval(alpha) {
            Ok(q) => q,
            Err(Error::NonFinite(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        if q.is_finite() && q <= q0 + params.gamma * alpha * slope {
            return Ok((alpha, q));
        }
        alpha *= params.beta;
    }
    Err(Error::LineSearchFailed {
        backtracks: params.max_backtracks,
        slope,
    })
}
