//! Projections onto the nonconvex sets `D`.
//!
//! Projections onto these sets are set-valued in general. Every oracle here
//! returns one deterministic element: lowest index first for sparsity, the
//! x-branch for box-switching ties, lowest member index for unions.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{jacobi_svd, symmetric_eigen, top_eigenpairs};
use crate::nnls::project_onto_polyhedron;
use crate::problem::{pack_symmetric, unpack_symmetric};

/// Above this size the PSD projection only computes the leading eigenpairs.
pub const FULL_EIGEN_MAX_DIM: usize = 64;
/// Asymmetry tolerated (and removed) by the PSD projection.
pub const SYMMETRY_TOL: f64 = 1e-8;
const LANCZOS_TOL: f64 = 1e-11;
const LANCZOS_SEED: u64 = 0x5eed_1a9c;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Polyhedron {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim("polyhedron rows", a.nrows(), b.len())?;
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        project_polyhedron(x, &self.a, &self.b)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (&self.a * x - &self.b).iter().all(|&v| v <= tol)
    }
}

/// Bounds of a box-switching set `{(x, y) : x_i y_i = 0, l ≤ x ≤ u, l ≤ y ≤ u}`.
/// Points are stored stacked as `[x; y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSwitching {
    pub lower_x: DVector<f64>,
    pub upper_x: DVector<f64>,
    pub lower_y: DVector<f64>,
    pub upper_y: DVector<f64>,
}

impl BoxSwitching {
    pub fn new(
        lower_x: DVector<f64>,
        upper_x: DVector<f64>,
        lower_y: DVector<f64>,
        upper_y: DVector<f64>,
    ) -> Result<Self> {
        let n = lower_x.len();
        for len in [upper_x.len(), lower_y.len(), upper_y.len()] {
            check_dim("box-switching bounds", n, len)?;
        }
        let ok = (0..n).all(|i| {
            lower_x[i] <= 0.0 && 0.0 <= upper_x[i] && lower_y[i] <= 0.0 && 0.0 <= upper_y[i]
        });
        if !ok {
            return Err(Error::InvalidParameter(
                "box-switching bounds must contain 0".into(),
            ));
        }
        Ok(Self {
            lower_x,
            upper_x,
            lower_y,
            upper_y,
        })
    }

    pub fn pairs(&self) -> usize {
        self.lower_x.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometricSet {
    WholeSpace { dim: usize },
    /// `{x ∈ ℝⁿ : ‖x‖₀ ≤ s}`.
    Sparsity { n: usize, s: usize },
    /// Column-major `rows × cols` matrices of rank at most `rank`.
    LowRank { rows: usize, cols: usize, rank: usize },
    /// Symmetric PSD `n × n` matrices of rank at most `rank`, either in full
    /// column-major storage or in the packed symmetric layout.
    PsdLowRank { n: usize, rank: usize, packed: bool },
    BoxSwitching(BoxSwitching),
    /// Union of polyhedra `⋃_q {x : A_q x ≤ b_q}`.
    Disjunctive(Vec<Polyhedron>),
    /// Cartesian product; blocks occupy consecutive coordinates.
    Product(Vec<GeometricSet>),
}

impl GeometricSet {
    pub fn sparsity(n: usize, s: usize) -> Result<Self> {
        let set = GeometricSet::Sparsity { n, s };
        set.validate()?;
        Ok(set)
    }

    pub fn low_rank(rows: usize, cols: usize, rank: usize) -> Result<Self> {
        let set = GeometricSet::LowRank { rows, cols, rank };
        set.validate()?;
        Ok(set)
    }

    pub fn psd_low_rank(n: usize, rank: usize, packed: bool) -> Result<Self> {
        let set = GeometricSet::PsdLowRank { n, rank, packed };
        set.validate()?;
        Ok(set)
    }

    pub fn disjunctive(members: Vec<Polyhedron>) -> Result<Self> {
        let set = GeometricSet::Disjunctive(members);
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeometricSet::WholeSpace { .. } | GeometricSet::BoxSwitching(_) => Ok(()),
            GeometricSet::Sparsity { n, s } => {
                if *s == 0 || s >= n {
                    return Err(Error::InvalidParameter(format!(
                        "sparsity level {s} must satisfy 0 < s < {n}"
                    )));
                }
                Ok(())
            }
            GeometricSet::LowRank { rows, cols, rank } => {
                let q = (*rows).min(*cols);
                if *rank == 0 || *rank + 1 > q {
                    return Err(Error::InvalidParameter(format!(
                        "rank bound {rank} must satisfy 1 <= rank <= {}",
                        q as i64 - 1
                    )));
                }
                Ok(())
            }
            GeometricSet::PsdLowRank { n, rank, .. } => {
                if *rank == 0 || *rank >= *n {
                    return Err(Error::InvalidParameter(format!(
                        "rank bound {rank} must satisfy 1 <= rank < {n}"
                    )));
                }
                Ok(())
            }
            GeometricSet::Disjunctive(members) => {
                if members.is_empty() {
                    return Err(Error::InvalidParameter("union needs a member".into()));
                }
                let n = members[0].dim();
                for m in members {
                    check_dim("union member", n, m.dim())?;
                }
                Ok(())
            }
            GeometricSet::Product(parts) => parts.iter().try_for_each(|p| p.validate()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeometricSet::WholeSpace { dim } => *dim,
            GeometricSet::Sparsity { n, .. } => *n,
            GeometricSet::LowRank { rows, cols, .. } => rows * cols,
            GeometricSet::PsdLowRank { n, packed, .. } => {
                if *packed {
                    n * (n + 1) / 2
                } else {
                    n * n
                }
            }
            GeometricSet::BoxSwitching(b) => 2 * b.pairs(),
            GeometricSet::Disjunctive(members) => members.first().map_or(0, |m| m.dim()),
            GeometricSet::Product(parts) => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// One element of `Π_D(x)`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("geometric projection", self.dim(), x.len())?;
        match self {
            GeometricSet::WholeSpace { .. } => Ok(x.clone()),
            GeometricSet::Sparsity { s, .. } => project_sparse(x, *s),
            GeometricSet::LowRank { rows, cols, rank } => {
                let m = DMatrix::from_column_slice(*rows, *cols, x.as_slice());
                let p = truncated_svd_project(&m, *rank)?;
                Ok(DVector::from_column_slice(p.as_slice()))
            }
            GeometricSet::PsdLowRank { n, rank, packed } => {
                if *packed {
                    let m = unpack_symmetric(x.as_slice(), *n);
                    let p = psd_lowrank_project(&m, *rank)?;
                    Ok(pack_symmetric(&p))
                } else {
                    let m = DMatrix::from_column_slice(*n, *n, x.as_slice());
                    let p = psd_lowrank_project(&m, *rank)?;
                    Ok(DVector::from_column_slice(p.as_slice()))
                }
            }
            GeometricSet::BoxSwitching(b) => {
                let n = b.pairs();
                let xs = x.rows(0, n).into_owned();
                let ys = x.rows(n, n).into_owned();
                let (px, py) = project_box_switching(&xs, &ys, b)?;
                let mut out = DVector::zeros(2 * n);
                out.rows_mut(0, n).copy_from(&px);
                out.rows_mut(n, n).copy_from(&py);
                Ok(out)
            }
            GeometricSet::Disjunctive(members) => project_disjunctive(x, members),
            GeometricSet::Product(parts) => {
                let mut out = DVector::zeros(x.len());
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    let block = part.project(&x.rows(offset, d).into_owned())?;
                    out.rows_mut(offset, d).copy_from(&block);
                    offset += d;
                }
                Ok(out)
            }
        }
    }

    /// Whether `x` is a fixed point of the projection, up to `tol` in norm.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok((self.project(x)? - x).norm() <= tol * x.norm().max(1.0))
    }
}

/// Keeps the `s` entries of largest magnitude (lowest index on ties).
pub fn project_sparse(x: &DVector<f64>, s: usize) -> Result<DVector<f64>> {
    let n = x.len();
    if s == 0 || s >= n {
        return Err(Error::InvalidParameter(format!(
            "sparsity level {s} must satisfy 0 < s < {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.select_nth_unstable_by(s - 1, |&i, &j| {
        x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j))
    });
    let mut out = DVector::zeros(n);
    for &i in &idx[..s] {
        out[i] = x[i];
    }
    Ok(out)
}

/// Best rank-`rank` approximation in Frobenius norm via the SVD.
pub fn truncated_svd_project(x: &DMatrix<f64>, rank: usize) -> Result<DMatrix<f64>> {
    let q = x.nrows().min(x.ncols());
    if rank == 0 || rank >= q {
        return Err(Error::InvalidParameter(format!(
            "rank bound {rank} must satisfy 1 <= rank < {q}"
        )));
    }
    let f = jacobi_svd(x)?;
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for i in 0..rank {
        let sigma = f.values[i];
        if sigma == 0.0 {
            break;
        }
        out += sigma * f.left.column(i) * f.right.column(i).transpose();
    }
    Ok(out)
}

/// `Σ_{i ≤ rank} max(0, λ_i) v_i v_iᵀ` for the leading eigenpairs.
pub fn psd_lowrank_project(x: &DMatrix<f64>, rank: usize) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "psd projection (square)",
            expected: n,
            got: x.ncols(),
        });
    }
    if rank == 0 || rank >= n {
        return Err(Error::InvalidParameter(format!(
            "rank bound {rank} must satisfy 1 <= rank < {n}"
        )));
    }
    let asym = (x - x.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = if asym > 0.0 {
        (x + x.transpose()) * 0.5
    } else {
        x.clone()
    };
    let factors = if n > FULL_EIGEN_MAX_DIM {
        top_eigenpairs(&sym, rank, LANCZOS_TOL, LANCZOS_SEED ^ n as u64)?
    } else {
        symmetric_eigen(&sym)?
    };
    let mut out = DMatrix::zeros(n, n);
    for i in 0..rank {
        let lam = factors.values[i];
        if lam <= 0.0 {
            break;
        }
        let v = factors.left.column(i);
        out.ger(lam, &v, &v, 1.0);
    }
    // Exact symmetry of the output.
    let out = (&out + out.transpose()) * 0.5;
    Ok(out)
}

/// Pairwise projection onto a box-switching set.
pub fn project_box_switching(
    x: &DVector<f64>,
    y: &DVector<f64>,
    set: &BoxSwitching,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = set.pairs();
    check_dim("box-switching x", n, x.len())?;
    check_dim("box-switching y", n, y.len())?;
    let mut px = DVector::zeros(n);
    let mut py = DVector::zeros(n);
    for i in 0..n {
        if !(set.lower_x[i] <= 0.0
            && 0.0 <= set.upper_x[i]
            && set.lower_y[i] <= 0.0
            && 0.0 <= set.upper_y[i])
        {
            return Err(Error::InvalidParameter(
                "box-switching bounds must contain 0".into(),
            ));
        }
        let xt = x[i].max(set.lower_x[i]).min(set.upper_x[i]);
        let yt = y[i].max(set.lower_y[i]).min(set.upper_y[i]);
        let keep_y = x[i] * x[i] + (yt - y[i]).powi(2);
        let keep_x = (xt - x[i]).powi(2) + y[i] * y[i];
        if keep_y >= keep_x {
            px[i] = xt;
        } else {
            py[i] = yt;
        }
    }
    Ok((px, py))
}

/// Projection onto `{z : Az ≤ b}`.
pub fn project_polyhedron(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim("polyhedron input", a.ncols(), x.len())?;
    check_dim("polyhedron rows", a.nrows(), b.len())?;
    project_onto_polyhedron(x, a, b).map(|(z, _)| z)
}

/// Closest of the member projections; lowest member index on ties.
pub fn project_disjunctive(x: &DVector<f64>, members: &[Polyhedron]) -> Result<DVector<f64>> {
    if members.is_empty() {
        return Err(Error::InvalidParameter("union needs a member".into()));
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for m in members {
        let p = m.project(x)?;
        let d = (&p - x).norm_squared();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, p));
        }
    }
    Ok(best.expect("nonempty union").1)
}
