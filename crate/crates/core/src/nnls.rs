//! Lawson–Hanson active-set NNLS and the least-distance program built on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `min ‖E u − f‖` subject to `u ≥ 0`.
///
/// Pivoting is deterministic: the entering index is the largest dual
/// component, lowest index on ties.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    let (_, n) = e.shape();
    let mut u = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = e.norm().max(1.0) * f.norm().max(1.0);
    let tol = 1e-13 * scale;
    let max_outer = 3 * n + 10;
    let mut skip = vec![false; n];

    for _ in 0..max_outer {
        let residual = f - e * &u;
        let w = e.tr_mul(&residual);
        let mut entering = None;
        let mut best = tol;
        for j in 0..n {
            if !passive[j] && !skip[j] && w[j] > best {
                best = w[j];
                entering = Some(j);
            }
        }
        let Some(t) = entering else {
            return Ok(u);
        };
        passive[t] = true;

        let mut first = true;
        loop {
            let z = passive_least_squares(e, f, &passive);
            if first && z[t] <= 0.0 {
                // Numerically dependent column; exclude it until u moves.
                passive[t] = false;
                skip[t] = true;
                break;
            }
            first = false;
            if (0..n).all(|j| !passive[j] || z[j] > 0.0) {
                u = z;
                skip.iter_mut().for_each(|s| *s = false);
                break;
            }
            let mut alpha = f64::INFINITY;
            for j in 0..n {
                if passive[j] && z[j] <= 0.0 {
                    let ratio = u[j] / (u[j] - z[j]);
                    if ratio < alpha {
                        alpha = ratio;
                    }
                }
            }
            for j in 0..n {
                if passive[j] {
                    u[j] += alpha * (z[j] - u[j]);
                }
            }
            for j in 0..n {
                if passive[j] && u[j] <= tol {
                    passive[j] = false;
                    u[j] = 0.0;
                }
            }
            skip.iter_mut().for_each(|s| *s = false);
        }
    }
    Err(Error::NoConvergence("NNLS active set"))
}

fn passive_least_squares(e: &DMatrix<f64>, f: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let mut z = DVector::zeros(passive.len());
    if cols.is_empty() {
        return z;
    }
    let sub = e.select_columns(cols.iter());
    let svd = sub.svd(true, true);
    let cutoff = 1e-13 * svd.singular_values.max();
    let sol = svd
        .solve(f, cutoff)
        .unwrap_or_else(|_| DVector::zeros(cols.len()));
    for (k, &j) in cols.iter().enumerate() {
        z[j] = sol[k];
    }
    z
}

/// Projection of `x` onto `{z : Az ≤ b}` through the least-distance program
/// `min ‖d‖ s.t. −A d ≥ Ax − b`, solved as NNLS on `[−A | Ax − b]ᵀ`.
///
/// Returns the projection and the multipliers `λ ≥ 0` with
/// `z = x − Aᵀλ`.
pub fn project_onto_polyhedron(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (s, n) = a.shape();
    let h = a * x - b;
    if h.iter().all(|&v| v <= 0.0) {
        return Ok((x.clone(), DVector::zeros(s)));
    }
    let mut e = DMatrix::zeros(n + 1, s);
    for i in 0..s {
        for j in 0..n {
            e[(j, i)] = -a[(i, j)];
        }
        e[(n, i)] = h[i];
    }
    let mut f = DVector::zeros(n + 1);
    f[n] = 1.0;
    let u = nnls(&e, &f)?;
    let r = &e * &u - &f;
    if r.norm() <= 1e-10 || r[n] >= 0.0 {
        return Err(Error::InfeasiblePolyhedron);
    }
    let denom = -r[n];
    let lambda = u / denom;
    let z = x - a.tr_mul(&lambda);
    Ok(polish(x, a, b, z, lambda))
}

/// Re-solves the equality-constrained projection on the detected active set;
/// keeps the refined point only if it is still a KKT point.
fn polish(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    z: DVector<f64>,
    lambda: DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let active: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
    if active.is_empty() {
        return (z, lambda);
    }
    let a_s = a.select_rows(active.iter());
    let rhs = &a_s * x - b.select_rows(active.iter());
    let gram = &a_s * a_s.transpose();
    let Some(chol) = gram.cholesky() else {
        return (z, lambda);
    };
    let lam_s = chol.solve(&rhs);
    if lam_s.iter().any(|&l| l < 0.0) {
        return (z, lambda);
    }
    let z_new = x - a_s.tr_mul(&lam_s);
    let before = kkt_residual(x, a, b, &z, &lambda);
    let mut lam_new = DVector::zeros(lambda.len());
    for (k, &i) in active.iter().enumerate() {
        lam_new[i] = lam_s[k];
    }
    let after = kkt_residual(x, a, b, &z_new, &lam_new);
    if after <= before {
        (z_new, lam_new)
    } else {
        (z, lambda)
    }
}

/// Largest violation among stationarity, primal feasibility, dual
/// feasibility and complementarity of the projection problem.
pub fn kkt_residual(
    x: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    z: &DVector<f64>,
    lambda: &DVector<f64>,
) -> f64 {
    let stationarity = (z - x + a.tr_mul(lambda)).amax();
    let slack = a * z - b;
    let primal = slack.iter().cloned().fold(0.0, f64::max);
    let dual = lambda.iter().map(|l| (-l).max(0.0)).fold(0.0, f64::max);
    let comp = lambda
        .iter()
        .zip(slack.iter())
        .map(|(l, s)| (l * s).abs())
        .fold(0.0, f64::max);
    stationarity.max(primal).max(dual).max(comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn nnls_unconstrained_optimum_is_positive() {
        let e = DMatrix::identity(2, 2);
        let u = nnls(&e, &dvector![1.0, 2.0]).unwrap();
        assert_eq!(u, dvector![1.0, 2.0]);
    }

    #[test]
    fn nnls_clips_negative_direction() {
        let e = DMatrix::identity(2, 2);
        let u = nnls(&e, &dvector![1.0, -2.0]).unwrap();
        assert_eq!(u, dvector![1.0, 0.0]);
    }

    #[test]
    fn half_space_projection() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let (z, lam) = project_onto_polyhedron(&dvector![2.0, 5.0], &a, &dvector![0.0]).unwrap();
        assert!((z - dvector![0.0, 5.0]).norm() < 1e-14);
        assert!((lam[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn empty_polyhedron_is_detected() {
        // x ≤ −1 and −x ≤ −1 (x ≥ 1)
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let r = project_onto_polyhedron(&dvector![0.0], &a, &dvector![-1.0, -1.0]);
        assert_eq!(r, Err(Error::InfeasiblePolyhedron));
    }

    #[test]
    fn corner_projection_has_small_kkt_residual() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = dvector![1.0, 1.0, 1.5];
        let x = dvector![3.0, 2.0];
        let (z, lam) = project_onto_polyhedron(&x, &a, &b).unwrap();
        assert!(kkt_residual(&x, &a, &b, &z, &lam) < 1e-12);
        assert!((z - dvector![1.0, 0.5]).norm() < 1e-12);
    }
}
