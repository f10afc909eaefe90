//! Central finite-difference check of the penalty gradient in `x`.

use geopd_core::error::Result;
use geopd_core::{MultiplierMode, PenaltyObjective, Problem};
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `‖g − g_fd‖ / max(1, ‖g‖)`.
    pub relative_error: f64,
    pub analytic_norm: f64,
}

/// Compares `∇ₓq_τ(x, y)` with central differences in every coordinate.
/// The multipliers are installed as given (clamped to the default bound).
pub fn penalty_gradient_error(
    problem: &Problem,
    tau: f64,
    x: &DVector<f64>,
    y: &DVector<f64>,
    lambda: Option<DVector<f64>>,
    mu: Option<DVector<f64>>,
) -> Result<GradCheck> {
    let mode = match (lambda.is_some(), mu.is_some()) {
        (false, false) => MultiplierMode::None,
        (true, false) => MultiplierMode::ConstraintsOnly,
        (false, true) => MultiplierMode::EqualityOnly,
        (true, true) => MultiplierMode::Both,
    };
    let mut po = PenaltyObjective::with_multipliers(problem, tau, mode, geopd_core::penalty::DEFAULT_MULTIPLIER_BOUND)?;
    po.set_multipliers(lambda, mu)?;
    let (_, g) = po.value_and_xgrad(x, y)?;
    let mut fd = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        let xi = x[i];
        xp[i] = xi + h;
        let fp = po.value_and_xgrad(&xp, y)?.0;
        xp[i] = xi - h;
        let fm = po.value_and_xgrad(&xp, y)?.0;
        xp[i] = xi;
        fd[i] = (fp - fm) / (2.0 * h);
    }
    Ok(GradCheck {
        relative_error: (&g - &fd).norm() / g.norm().max(1.0),
        analytic_norm: g.norm(),
    })
}
