//! Closed convex target sets `C` for the constraint `G(x) ∈ C`.
//!
//! Every target exposes the Euclidean projection `P_C`, the distance
//! `dist_C`, and the squared distance `s_C(y) = ½ dist_C(y)²` together with
//! its gradient `y − P_C(y)`.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// Absolute tolerance on the distance for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexTarget {
    /// `C = 𝕐`; the constraint is vacuous.
    WholeSpace { dim: usize },
    /// `C = {0}`.
    SingletonZero { dim: usize },
    /// `C = [l, u]`, componentwise; infinite bounds are allowed.
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    /// `C = {z ≥ 0 : Σ z = 1}`.
    UnitSimplex { dim: usize },
    /// `C = {z : z ≤ t}`.
    NonpositiveShifted { shift: DVector<f64> },
    /// Cartesian product; blocks occupy consecutive coordinates.
    Product(Vec<ConvexTarget>),
}

impl ConvexTarget {
    /// Builds a box, checking `l ≤ u` componentwise.
    pub fn new_box(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower
            .iter()
            .zip(upper.iter())
            .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return Err(Error::InvalidParameter("box requires lower <= upper".into()));
        }
        Ok(ConvexTarget::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexTarget::WholeSpace { dim }
            | ConvexTarget::SingletonZero { dim }
            | ConvexTarget::UnitSimplex { dim } => *dim,
            ConvexTarget::Box { lower, .. } => lower.len(),
            ConvexTarget::NonpositiveShifted { shift } => shift.len(),
            ConvexTarget::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Euclidean projection `P_C(y)`.
    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("convex projection", self.dim(), y.len())?;
        let mut out = y.clone();
        self.project_into(y.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    fn project_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            ConvexTarget::WholeSpace { .. } => out.copy_from_slice(y),
            ConvexTarget::SingletonZero { .. } => out.fill(0.0),
            ConvexTarget::Box { lower, upper } => {
                for i in 0..y.len() {
                    out[i] = y[i].max(lower[i]).min(upper[i]);
                }
            }
            ConvexTarget::UnitSimplex { .. } => project_simplex(y, out),
            ConvexTarget::NonpositiveShifted { shift } => {
                for i in 0..y.len() {
                    out[i] = y[i].min(shift[i]);
                }
            }
            ConvexTarget::Product(parts) => {
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    part.project_into(&y[offset..offset + d], &mut out[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }

    /// `dist_C(y) = ‖y − P_C(y)‖`.
    pub fn distance(&self, y: &DVector<f64>) -> Result<f64> {
        let p = self.project(y)?;
        Ok((y - p).norm())
    }

    /// Returns `(½‖y − P_C(y)‖², y − P_C(y))`.
    pub fn squared_distance_and_gradient(&self, y: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let p = self.project(y)?;
        let grad = y - p;
        Ok((0.5 * grad.norm_squared(), grad))
    }

    pub fn contains(&self, y: &DVector<f64>) -> Result<bool> {
        Ok(self.distance(y)? <= MEMBERSHIP_TOL)
    }
}

/// Sort-based projection onto the unit simplex.
fn project_simplex(y: &[f64], out: &mut [f64]) {
    let n = y.len();
    if n == 0 {
        return;
    }
    let mut sorted = y.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for i in 0..n {
        out[i] = (y[i] - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn box_clamps_componentwise() {
        let c = ConvexTarget::new_box(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
        assert_eq!(c.project(&dvector![2.0, -3.0]).unwrap(), dvector![1.0, 0.0]);
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(ConvexTarget::new_box(dvector![1.0], dvector![0.0]).is_err());
    }

    #[test]
    fn infinite_bounds_clamp_one_side() {
        let c = ConvexTarget::new_box(dvector![0.0, f64::NEG_INFINITY], dvector![f64::INFINITY, 1.0])
            .unwrap();
        assert_eq!(c.project(&dvector![-4.0, 7.0]).unwrap(), dvector![0.0, 1.0]);
        assert_eq!(c.project(&dvector![4.0, -7.0]).unwrap(), dvector![4.0, -7.0]);
    }

    #[test]
    fn simplex_symmetric_point() {
        let c = ConvexTarget::UnitSimplex { dim: 3 };
        let p = c.project(&dvector![0.5, 0.5, 0.5]).unwrap();
        for v in p.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn simplex_vertex() {
        let c = ConvexTarget::UnitSimplex { dim: 2 };
        assert_eq!(c.project(&dvector![2.0, 0.0]).unwrap(), dvector![1.0, 0.0]);
    }

    #[test]
    fn scalar_box_squared_distance() {
        let c = ConvexTarget::new_box(dvector![0.0], dvector![1.0]).unwrap();
        let (s, g) = c.squared_distance_and_gradient(&dvector![2.0]).unwrap();
        assert_eq!(s, 0.5);
        assert_eq!(g, dvector![1.0]);
    }

    #[test]
    fn member_has_zero_distance_and_gradient() {
        let c = ConvexTarget::UnitSimplex { dim: 3 };
        let y = dvector![0.2, 0.3, 0.5];
        let (s, g) = c.squared_distance_and_gradient(&y).unwrap();
        assert!(s < 1e-30);
        assert!(g.norm() < 1e-15);
        assert!(c.contains(&y).unwrap());
    }

    #[test]
    fn product_projects_blockwise() {
        let c = ConvexTarget::Product(vec![
            ConvexTarget::SingletonZero { dim: 1 },
            ConvexTarget::NonpositiveShifted {
                shift: dvector![0.5, 0.5],
            },
        ]);
        assert_eq!(c.dim(), 3);
        assert_eq!(
            c.project(&dvector![3.0, 1.0, -1.0]).unwrap(),
            dvector![0.0, 0.5, -1.0]
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = ConvexTarget::UnitSimplex { dim: 3 };
        assert!(matches!(
            c.project(&dvector![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
