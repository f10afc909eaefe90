//! Sparsity-constrained quadratic programs and their enumeration oracles.

use std::sync::Arc;

use geopd_core::error::{Error, Result};
use geopd_core::problem::{Quadratic, Shape};
use geopd_core::{ConvexTarget, GeometricSet, Problem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::stream;

/// Largest dimension the enumeration oracles accept.
pub const ORACLE_MAX_DIM: usize = 25;

/// `Q = Y D Y` with a random Householder reflector `Y` and
/// `d_i = exp((i−1)/(n−1) · n_cond)`, plus `c ~ U(−1,1)ⁿ`.
pub fn random_quadratic(n: usize, n_cond: f64, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut ry = stream(seed, 0);
    let mut rc = stream(seed, 1);
    let y = DVector::from_fn(n, |_, _| ry.random_range(-1.0..1.0));
    let c = DVector::from_fn(n, |_, _| rc.random_range(-1.0..1.0));
    let householder = DMatrix::identity(n, n) - (2.0 / y.norm_squared()) * &y * y.transpose();
    let d = DVector::from_fn(n, |i, _| {
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        (t * n_cond).exp()
    });
    let q: DMatrix<f64> = &householder * DMatrix::from_diagonal(&d) * &householder;
    ((&q + q.transpose()) * 0.5, c)
}

fn check_sparsity(n: usize, s: usize) -> Result<()> {
    if n < 2 || s == 0 || s >= n {
        return Err(Error::InvalidParameter(format!("need n >= 2 and 0 < s < n, got n={n} s={s}")));
    }
    Ok(())
}

pub fn gen_sparse_qp(n: usize, n_cond: f64, s: usize, nu: f64, seed: u64) -> Result<Problem> {
    check_sparsity(n, s)?;
    let (q, c) = random_quadratic(n, n_cond, seed);
    Problem::new(
        format!("sparse_qp_n{n}_c{n_cond}_s{s}_seed{seed}"),
        Shape::Vector { len: n },
        Arc::new(Quadratic { q, c: nu * c }),
        GeometricSet::sparsity(n, s)?,
    )
}

pub fn beck_eldar_data() -> (DMatrix<f64>, DVector<f64>) {
    let q = DMatrix::from_element(5, 5, 1.0) + DMatrix::identity(5, 5);
    let c = DVector::from_vec(vec![-3.0, -2.0, -3.0, -12.0, -5.0]);
    (q, c)
}

pub fn gen_beck_eldar() -> Problem {
    let (q, c) = beck_eldar_data();
    Problem::new(
        "beck_eldar",
        Shape::Vector { len: 5 },
        Arc::new(Quadratic { q, c }),
        GeometricSet::Sparsity { n: 5, s: 2 },
    )
    .expect("fixed instance is well formed")
}

pub fn gen_portfolio(n: usize, n_cond: f64, s: usize, nu: f64, seed: u64) -> Result<Problem> {
    check_sparsity(n, s)?;
    let (q, c) = random_quadratic(n, n_cond, seed);
    Problem::new(
        format!("portfolio_n{n}_c{n_cond}_s{s}_seed{seed}"),
        Shape::Vector { len: n },
        Arc::new(Quadratic { q, c: nu * c }),
        GeometricSet::sparsity(n, s)?,
    )?
    .with_constraint(
        Arc::new(geopd_core::problem::AffineMap {
            m: DMatrix::identity(n, n),
            b: DVector::zeros(n),
        }),
        ConvexTarget::UnitSimplex { dim: n },
    )
}

/// Every `k`-subset of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn restrict(q: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| q[(idx[i], idx[j])])
}

fn scatter(n: usize, idx: &[usize], z: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    for (k, &i) in idx.iter().enumerate() {
        x[i] = z[k];
    }
    x
}

/// Global minimum of `½xᵀQx + cᵀx` over `‖x‖₀ ≤ s` by solving the
/// restricted system on every support of size `s`.
pub fn oracle_sparse_qp_global(q: &DMatrix<f64>, c: &DVector<f64>, s: usize) -> Result<(f64, DVector<f64>)> {
    let n = c.len();
    if n > ORACLE_MAX_DIM {
        return Err(Error::InvalidParameter(format!("enumeration budget exceeded: n = {n}")));
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for support in subsets(n, s.min(n)) {
        let qs = restrict(q, &support);
        let cs = DVector::from_fn(support.len(), |i, _| c[support[i]]);
        let Some(chol) = qs.cholesky() else {
            return Err(Error::InvalidParameter("restricted matrix not positive definite".into()));
        };
        let z = -chol.solve(&cs);
        let f = 0.5 * cs.dot(&z);
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, scatter(n, &support, &z)));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no support to enumerate".into()))
}

/// Global minimum of `½xᵀQx + cᵀx` over the unit simplex intersected with
/// `‖x‖₀ ≤ s`: every face with at most `s` vertices is solved through its
/// equality-constrained KKT system and nonnegative solutions are kept.
pub fn oracle_portfolio_global(q: &DMatrix<f64>, c: &DVector<f64>, s: usize) -> Result<(f64, DVector<f64>)> {
    let n = c.len();
    if n > ORACLE_MAX_DIM {
        return Err(Error::InvalidParameter(format!("enumeration budget exceeded: n = {n}")));
    }
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 1..=s.min(n) {
        for face in subsets(n, k) {
            let mut kkt = DMatrix::zeros(k + 1, k + 1);
            kkt.view_mut((0, 0), (k, k)).copy_from(&restrict(q, &face));
            for i in 0..k {
                kkt[(i, k)] = 1.0;
                kkt[(k, i)] = 1.0;
            }
            let mut rhs = DVector::zeros(k + 1);
            for i in 0..k {
                rhs[i] = -c[face[i]];
            }
            rhs[k] = 1.0;
            let Some(sol) = kkt.lu().solve(&rhs) else {
                continue;
            };
            let z = sol.rows(0, k).into_owned();
            if z.iter().any(|&v| v < -1e-12) {
                continue;
            }
            let z = z.map(|v| v.max(0.0));
            let x = scatter(n, &face, &z);
            let f = 0.5 * x.dot(&(q * &x)) + c.dot(&x);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no feasible face".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_count() {
        assert_eq!(subsets(5, 2).len(), 10);
        assert_eq!(subsets(10, 3).len(), 120);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(subsets(4, 1).len(), 4);
    }

    #[test]
    fn beck_eldar_known_values() {
        let p = gen_beck_eldar();
        let x = DVector::from_vec(vec![0.0, 0.0, 0.0, 6.0, 6.0]);
        assert_eq!(p.objective_value(&x).unwrap(), 6.0);
        assert_eq!(p.objective_value(&DVector::zeros(5)).unwrap(), 0.0);
        let (q, c) = beck_eldar_data();
        let (f, x) = oracle_sparse_qp_global(&q, &c, 2).unwrap();
        assert!((f + 124.0 / 3.0).abs() < 1e-12);
        assert!(x[0] == 0.0 && x[2] == 0.0 && x[4] == 0.0);
    }

    #[test]
    fn householder_spectrum() {
        let (q, _) = random_quadratic(8, 10.0, 3);
        let mut ev: Vec<f64> = q.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        for (i, v) in ev.iter().enumerate() {
            let d = (i as f64 / 7.0 * 10.0).exp();
            assert!((v - d).abs() <= 1e-8 * d.max(1.0), "{v} vs {d}");
        }
        assert!(((ev[7] / ev[0]).ln() - 10.0).abs() < 1e-10);
    }

    #[test]
    fn single_coordinate_oracle() {
        let (q, c) = random_quadratic(10, 10.0, 7);
        let (f, _) = oracle_sparse_qp_global(&q, &c, 1).unwrap();
        let closed = (0..10).map(|i| -c[i] * c[i] / (2.0 * q[(i, i)])).fold(f64::INFINITY, f64::min);
        assert!((f - closed).abs() <= 1e-12 * closed.abs().max(1.0));
    }

    #[test]
    fn portfolio_start_is_feasible() {
        let p = gen_portfolio(20, 10.0, 4, 1.0, 1).unwrap();
        let x0 = DVector::from_element(20, 1.0 / 20.0);
        let (_, dist) = p.evaluate_constraints(&x0).unwrap();
        assert!(dist < 1e-15);
    }

    #[test]
    fn portfolio_oracle_vertex_case() {
        // Strongly negative c_0: best portfolio is the vertex e_0.
        let q = DMatrix::identity(3, 3);
        let c = DVector::from_vec(vec![-10.0, 0.0, 0.0]);
        let (f, x) = oracle_portfolio_global(&q, &c, 2).unwrap();
        assert_eq!(x, DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert_eq!(f, -9.5);
    }
}
