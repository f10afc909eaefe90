//! The problem model `min f(x) s.t. G(x) ∈ C, x ∈ D`.
//!
//! Matrix-valued variables are flattened into vectors (column-major, or the
//! packed symmetric layout) so that the Frobenius inner product coincides with
//! the vector dot product; [`Shape`] records how to undo the flattening.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::convex::ConvexTarget;
use crate::error::{check_dim, check_finite, Error, Result};
use crate::geometric::GeometricSet;

/// Layout of the decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Shape {
    Vector { len: usize },
    /// Column-major `rows × cols` matrix.
    Matrix { rows: usize, cols: usize },
    /// Symmetric `n × n` matrix stored by [`pack_symmetric`].
    SymmetricPacked { n: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector { len } => len,
            Shape::Matrix { rows, cols } => rows * cols,
            Shape::SymmetricPacked { n } => n * (n + 1) / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Packs a symmetric matrix into `n(n+1)/2` coordinates: the diagonal first,
/// then the strict upper triangle row by row scaled by `√2`. The map is an
/// isometry between the Frobenius norm and the Euclidean norm.
pub fn pack_symmetric(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = DVector::zeros(n * (n + 1) / 2);
    for i in 0..n {
        out[i] = m[(i, i)];
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            out[k] = std::f64::consts::SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
    out
}

/// Inverse of [`pack_symmetric`].
pub fn unpack_symmetric(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = v[i];
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Smooth objective oracle returning value and gradient jointly.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>);

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_and_gradient(x).0
    }
}

/// Smooth constraint map `G : 𝕏 → 𝕐`, exposed through its value and the
/// adjoint Jacobian product `G'(x)* w`.
pub trait ConstraintMap: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> DVector<f64>;
    fn adjoint_apply(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64>;
}

/// How a closed-form x-update treats the constraint `G(x) ∈ C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMode {
    /// Minimize the full penalty function `q_τ(·, y)`.
    Penalized,
    /// Keep `G(x) ∈ C` as a hard constraint of the x-update.
    LowerLevel,
}

/// Closed-form minimizer of the penalty function in `x`, for problem
/// families where one exists.
pub trait ExactXUpdate: Send + Sync {
    fn minimize(
        &self,
        y: &DVector<f64>,
        tau: f64,
        lambda: Option<&DVector<f64>>,
        mu: Option<&DVector<f64>>,
        mode: ExactMode,
    ) -> Result<DVector<f64>>;
}

/// `G(x) ∈ C` with its target set.
#[derive(Clone)]
pub struct Constraint {
    pub map: Arc<dyn ConstraintMap>,
    pub target: ConvexTarget,
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub shape: Shape,
    objective: Arc<dyn Objective>,
    constraint: Option<Constraint>,
    set: GeometricSet,
    exact_update: Option<Arc<dyn ExactXUpdate>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("has_constraint", &self.constraint.is_some())
            .field("set", &self.set)
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        shape: Shape,
        objective: Arc<dyn Objective>,
        set: GeometricSet,
    ) -> Result<Self> {
        check_dim("objective dimension", shape.len(), objective.dim())?;
        check_dim("geometric set dimension", shape.len(), set.dim())?;
        Ok(Self {
            name: name.into(),
            shape,
            objective,
            constraint: None,
            set,
            exact_update: None,
        })
    }

    pub fn with_constraint(
        mut self,
        map: Arc<dyn ConstraintMap>,
        target: ConvexTarget,
    ) -> Result<Self> {
        check_dim("constraint input", self.shape.len(), map.input_dim())?;
        check_dim("constraint target", map.output_dim(), target.dim())?;
        self.constraint = Some(Constraint { map, target });
        Ok(self)
    }

    pub fn with_exact_update(mut self, update: Arc<dyn ExactXUpdate>) -> Self {
        self.exact_update = Some(update);
        self
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn constraint(&self) -> Option<&Constraint> {
        self.constraint.as_ref()
    }

    pub fn set(&self) -> &GeometricSet {
        &self.set
    }

    pub fn exact_update(&self) -> Option<&Arc<dyn ExactXUpdate>> {
        self.exact_update.as_ref()
    }

    /// `(f(x), ∇f(x))`, rejecting malformed inputs and outputs.
    pub fn evaluate_objective(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim("objective input", self.dim(), x.len())?;
        check_finite("objective input", x.as_slice())?;
        let (value, grad) = self.objective.value_and_gradient(x);
        check_dim("objective gradient", self.dim(), grad.len())?;
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        check_finite("objective gradient", grad.as_slice())?;
        Ok((value, grad))
    }

    /// Like `evaluate_objective` but leaves finiteness checks of the input and
    /// of the gradient to the caller.
    pub(crate) fn evaluate_objective_unchecked(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim("objective input", self.dim(), x.len())?;
        let (value, grad) = self.objective.value_and_gradient(x);
        check_dim("objective gradient", self.dim(), grad.len())?;
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        Ok((value, grad))
    }

    pub fn objective_value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim("objective input", self.dim(), x.len())?;
        let value = self.objective.value(x);
        if !value.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        Ok(value)
    }

    /// `(G(x), dist_C(G(x)))`; an absent constraint yields an empty vector
    /// and a zero residual.
    pub fn evaluate_constraints(&self, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        check_dim("constraint input", self.dim(), x.len())?;
        match &self.constraint {
            None => Ok((DVector::zeros(0), 0.0)),
            Some(c) => {
                let g = c.map.value(x);
                check_finite("constraint value", g.as_slice())?;
                let residual = c.target.distance(&g)?;
                Ok((g, residual))
            }
        }
    }
}

/// `f(x) = ½ xᵀQx + cᵀx` with symmetric `Q`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let qx = &self.q * x;
        let value = 0.5 * x.dot(&qx) + self.c.dot(x);
        (value, qx + &self.c)
    }
}

/// `G(x) = Mx − b`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl ConstraintMap for AffineMap {
    fn input_dim(&self) -> usize {
        self.m.ncols()
    }

    fn output_dim(&self) -> usize {
        self.m.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x - &self.b
    }

    fn adjoint_apply(&self, _x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.m.tr_mul(w)
    }
}

/// Adapts a closure `x ↦ (f, ∇f)` into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.f)(x)
    }
}
