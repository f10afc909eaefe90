//! Nearest low-rank correlation matrices in packed symmetric coordinates.

use std::sync::Arc;

use geopd_core::error::{check_dim, Error, Result};
use geopd_core::problem::{pack_symmetric, ConstraintMap, ExactMode, ExactXUpdate, FnObjective, Shape};
use geopd_core::{ConvexTarget, GeometricSet, Problem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorrelationVariant {
    P1,
    P2,
    P3,
}

impl CorrelationVariant {
    pub fn entry(self, i: usize, j: usize) -> f64 {
        let d = (i as f64 - j as f64).abs();
        match self {
            CorrelationVariant::P1 => 0.5 + 0.5 * (-0.05 * d).exp(),
            CorrelationVariant::P2 => (-d).exp(),
            CorrelationVariant::P3 => 0.6 + 0.4 * (-0.1 * d).exp(),
        }
    }

    pub fn matrix(self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn name(self) -> &'static str {
        match self {
            CorrelationVariant::P1 => "p1",
            CorrelationVariant::P2 => "p2",
            CorrelationVariant::P3 => "p3",
        }
    }
}

/// `G(x) = diag(X) − e`; the diagonal occupies the first `n` packed slots.
#[derive(Debug, Clone)]
pub struct DiagonalMap {
    pub n: usize,
}

impl ConstraintMap for DiagonalMap {
    fn input_dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn output_dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, self.n).map(|v| v - 1.0)
    }

    fn adjoint_apply(&self, _x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.input_dim());
        out.rows_mut(0, self.n).copy_from(w);
        out
    }
}

/// Closed-form minimizer of the penalty function in `X`.
#[derive(Debug, Clone)]
pub struct CorrelationExactUpdate {
    pub n: usize,
    pub target: DVector<f64>,
}

impl ExactXUpdate for CorrelationExactUpdate {
    fn minimize(
        &self,
        y: &DVector<f64>,
        tau: f64,
        lambda: Option<&DVector<f64>>,
        mu: Option<&DVector<f64>>,
        mode: ExactMode,
    ) -> Result<DVector<f64>> {
        check_dim("exact update y", self.target.len(), y.len())?;
        let mut x = DVector::from_fn(y.len(), |k, _| {
            let shift = mu.map_or(0.0, |m| m[k]);
            (self.target[k] + tau * y[k] - shift) / (1.0 + tau)
        });
        for i in 0..self.n {
            x[i] = match mode {
                ExactMode::LowerLevel => 1.0,
                ExactMode::Penalized => {
                    let shift = mu.map_or(0.0, |m| m[i]);
                    let l = lambda.map_or(0.0, |l| l[i]);
                    (self.target[i] + tau * y[i] - shift + tau - l) / (1.0 + 2.0 * tau)
                }
            };
        }
        Ok(x)
    }
}

pub fn gen_correlation(variant: CorrelationVariant, n: usize, rank: usize) -> Result<Problem> {
    if n < 2 || rank == 0 || rank >= n {
        return Err(Error::InvalidParameter(format!("need n >= 2 and 1 <= rank < n, got n={n} rank={rank}")));
    }
    let a = pack_symmetric(&variant.matrix(n));
    let dim = a.len();
    let target = a.clone();
    let objective = FnObjective::new(dim, move |x: &DVector<f64>| {
        let r = x - &target;
        (0.5 * r.norm_squared(), r)
    });
    Ok(Problem::new(
        format!("correlation_{}_n{n}_r{rank}", variant.name()),
        Shape::SymmetricPacked { n },
        Arc::new(objective),
        GeometricSet::psd_low_rank(n, rank, true)?,
    )?
    .with_constraint(Arc::new(DiagonalMap { n }), ConvexTarget::SingletonZero { dim: n })?
    .with_exact_update(Arc::new(CorrelationExactUpdate { n, target: a })))
}

/// Packed form of the target matrix, the default starting point.
pub fn correlation_start(variant: CorrelationVariant, n: usize) -> DVector<f64> {
    pack_symmetric(&variant.matrix(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use geopd_core::PenaltyObjective;

    #[test]
    fn unit_diagonal_and_symmetric() {
        for v in [CorrelationVariant::P1, CorrelationVariant::P2, CorrelationVariant::P3] {
            let a = v.matrix(30);
            assert_eq!(a, a.transpose());
            assert!(a.diagonal().iter().all(|&d| d == 1.0));
        }
    }

    #[test]
    fn target_is_c_feasible_with_zero_objective() {
        let p = gen_correlation(CorrelationVariant::P2, 12, 3).unwrap();
        let a = correlation_start(CorrelationVariant::P2, 12);
        assert_eq!(p.objective_value(&a).unwrap(), 0.0);
        assert_eq!(p.evaluate_constraints(&a).unwrap().1, 0.0);
        assert!(!p.set().contains(&a, 1e-8).unwrap());
    }

    #[test]
    fn exact_update_zeroes_penalized_gradient() {
        let p = gen_correlation(CorrelationVariant::P1, 8, 2).unwrap();
        let mut po = PenaltyObjective::with_multipliers(&p, 3.0, geopd_core::MultiplierMode::Both, 1e8).unwrap();
        let dim = 36;
        let y = DVector::from_fn(dim, |k, _| ((k * 7) as f64).sin());
        let mu = DVector::from_fn(dim, |k, _| ((k * 3) as f64).cos());
        let lam = DVector::from_fn(8, |k, _| 0.1 * k as f64);
        po.set_multipliers(Some(lam.clone()), Some(mu.clone())).unwrap();
        let upd = CorrelationExactUpdate {
            n: 8,
            target: correlation_start(CorrelationVariant::P1, 8),
        };
        let x = upd.minimize(&y, 3.0, Some(&lam), Some(&mu), ExactMode::Penalized).unwrap();
        let (_, g) = po.value_and_xgrad(&x, &y).unwrap();
        assert!(g.norm() < 1e-12, "{}", g.norm());
    }

    #[test]
    fn lower_level_update_keeps_unit_diagonal() {
        let upd = CorrelationExactUpdate {
            n: 4,
            target: correlation_start(CorrelationVariant::P3, 4),
        };
        let y = DVector::from_element(10, 0.3);
        let x = upd.minimize(&y, 2.0, None, None, ExactMode::LowerLevel).unwrap();
        assert!(x.rows(0, 4).iter().all(|&v| v == 1.0));
    }
}
