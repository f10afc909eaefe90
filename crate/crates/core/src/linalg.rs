//! Dense spectral kernels used by the rank-constrained projections.
//!
//! - one-sided (Hestenes) Jacobi SVD,
//! - symmetric eigendecomposition by Householder tridiagonalization followed
//!   by implicit-shift QL,
//! - a Lanczos iteration with full reorthogonalization for the leading
//!   eigenpairs of large symmetric matrices.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
const QL_MAX_ITERS: usize = 100;

/// Singular values (or eigenvalues) sorted nonincreasing, with the matching
/// orthonormal vectors stored column by column.
#[derive(Debug, Clone)]
pub struct SpectralFactors {
    pub values: DVector<f64>,
    pub left: DMatrix<f64>,
    /// Right singular vectors; for eigendecompositions this equals `left`.
    pub right: DMatrix<f64>,
}

/// Thin SVD `A = U diag(σ) Vᵀ` with `q = min(m, n)` singular triplets.
pub fn jacobi_svd(a: &DMatrix<f64>) -> Result<SpectralFactors> {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(SpectralFactors {
            values: t.values,
            left: t.right,
            right: t.left,
        });
    }
    // m >= n: orthogonalize the columns of W = A V.
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi SVD"));
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let mut values = DVector::zeros(n);
    let mut left = DMatrix::zeros(m, n);
    let mut right = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        values[k] = norms[j];
        right.set_column(k, &v.column(j));
        if norms[j] > f64::EPSILON * scale.max(f64::MIN_POSITIVE) * (m as f64) {
            left.set_column(k, &(w.column(j) / norms[j]));
        }
    }
    complete_orthonormal_columns(&mut left, &values, scale);
    Ok(SpectralFactors {
        values,
        left,
        right,
    })
}

/// Replaces left vectors of negligible singular values by an orthonormal
/// completion so that `left` has orthonormal columns.
fn complete_orthonormal_columns(u: &mut DMatrix<f64>, values: &DVector<f64>, scale: f64) {
    let (m, q) = u.shape();
    let cutoff = f64::EPSILON * scale.max(f64::MIN_POSITIVE) * (m as f64);
    let mut next_unit = 0;
    for k in 0..q {
        if values[k] > cutoff {
            continue;
        }
        while next_unit < m {
            let mut cand = DVector::zeros(m);
            cand[next_unit] = 1.0;
            next_unit += 1;
            for j in 0..q {
                if j == k || (values[j] <= cutoff && j > k) {
                    continue;
                }
                let proj = u.column(j).dot(&cand);
                cand.axpy(-proj, &u.column(j).clone_owned(), 1.0);
            }
            let nrm = cand.norm();
            if nrm > 1e-8 {
                u.set_column(k, &(cand / nrm));
                break;
            }
        }
    }
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues nonincreasing.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SpectralFactors> {
    let n = a.nrows();
    if n == 0 {
        return Ok(SpectralFactors {
            values: DVector::zeros(0),
            left: DMatrix::zeros(0, 0),
            right: DMatrix::zeros(0, 0),
        });
    }
    let mut z = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut z, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e, Some(&mut z))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        values[k] = d[j];
        vectors.set_column(k, &z.column(j));
    }
    Ok(SpectralFactors {
        values,
        left: vectors.clone(),
        right: vectors,
    })
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// On exit `z` holds the accumulated orthogonal transformation, `d` the
/// diagonal and `e[1..]` the subdiagonal (`e[0] = 0`).
fn householder_tridiagonalize(z: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = z.nrows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = z[(i, l)];
            } else {
                for k in 0..=l {
                    z[(i, k)] /= scale;
                    h += z[(i, k)] * z[(i, k)];
                }
                let f = z[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    z[(j, i)] = z[(i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[(j, k)] * z[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += z[(k, j)] * z[(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[(j, k)] -= f * e[k] + g * z[(i, k)];
                    }
                }
            }
        } else {
            e[i] = z[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[(i, k)] * z[(k, j)];
                }
                for k in 0..i {
                    z[(k, j)] -= g * z[(k, i)];
                }
            }
        }
        d[i] = z[(i, i)];
        z[(i, i)] = 1.0;
        for j in 0..i {
            z[(j, i)] = 0.0;
            z[(i, j)] = 0.0;
        }
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix with diagonal `d` and
/// subdiagonal `e[1..]`. Eigenvectors are accumulated into `z` when given.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DMatrix<f64>>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITERS {
                return Err(Error::NoConvergence("tridiagonal QL"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..z.nrows() {
                        let zf = z[(k, i + 1)];
                        z[(k, i + 1)] = s * z[(k, i)] + c * zf;
                        z[(k, i)] = c * z[(k, i)] - s * zf;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenpairs of a symmetric tridiagonal matrix (`diag`, `off`), sorted
/// nonincreasing. Returns the eigenvector matrix in the tridiagonal basis.
fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(&off[..(n - 1)]);
    let mut z = DMatrix::identity(n, n);
    tridiagonal_ql(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = vec![0.0; n];
    for (k, &j) in order.iter().enumerate() {
        vals[k] = d[j];
        vecs.set_column(k, &z.column(j));
    }
    Ok((vals, vecs))
}

/// Leading `k` eigenpairs (largest algebraic eigenvalues) of a symmetric
/// matrix by Lanczos with full reorthogonalization. The Krylov dimension is
/// enlarged until every wanted Ritz pair has a residual below
/// `tol · max(1, ‖A‖)`; if that never happens, the full decomposition is
/// used instead.
pub fn top_eigenpairs(a: &DMatrix<f64>, k: usize, tol: f64, seed: u64) -> Result<SpectralFactors> {
    let n = a.nrows();
    if k == 0 || n == 0 {
        return Ok(SpectralFactors {
            values: DVector::zeros(0),
            left: DMatrix::zeros(n, 0),
            right: DMatrix::zeros(n, 0),
        });
    }
    let mut dim = (3 * k + 20).min(n);
    loop {
        if dim * 2 > n {
            break;
        }
        if let Some(f) = lanczos(a, k, dim, tol, seed)? {
            return Ok(f);
        }
        dim *= 2;
    }
    let full = symmetric_eigen(a)?;
    let left = full.left.columns(0, k).into_owned();
    Ok(SpectralFactors {
        values: full.values.rows(0, k).into_owned(),
        right: left.clone(),
        left,
    })
}

fn lanczos(
    a: &DMatrix<f64>,
    k: usize,
    steps: usize,
    tol: f64,
    seed: u64,
) -> Result<Option<SpectralFactors>> {
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = DMatrix::<f64>::zeros(n, steps);
    let mut alpha = vec![0.0; steps];
    let mut beta = vec![0.0; steps];

    let mut q = random_unit_orthogonal(&mut rng, &basis, 0);
    let mut norm_est: f64 = 0.0;
    for j in 0..steps {
        basis.set_column(j, &q);
        let mut w = a * &q;
        alpha[j] = q.dot(&w);
        norm_est = norm_est.max(w.norm());
        // Two passes of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            let coeffs = basis.columns(0, j + 1).tr_mul(&w);
            w -= basis.columns(0, j + 1) * coeffs;
        }
        let b = w.norm();
        if j + 1 == steps {
            beta[j] = b;
            break;
        }
        if b <= 1e-10 * norm_est.max(1.0) {
            // Invariant subspace found; continue with a fresh direction.
            beta[j] = 0.0;
            q = random_unit_orthogonal(&mut rng, &basis, j + 1);
        } else {
            beta[j] = b;
            q = w / b;
        }
    }

    let (vals, vecs) = tridiagonal_eigen(&alpha, &beta[..steps - 1])?;
    let threshold = tol * norm_est.max(1.0);
    let last_beta = beta[steps - 1];
    for i in 0..k {
        if (last_beta * vecs[(steps - 1, i)]).abs() > threshold {
            return Ok(None);
        }
    }
    let ritz = &basis * vecs.columns(0, k);
    Ok(Some(SpectralFactors {
        values: DVector::from_column_slice(&vals[..k]),
        left: ritz.clone(),
        right: ritz,
    }))
}

fn random_unit_orthogonal(rng: &mut ChaCha8Rng, basis: &DMatrix<f64>, used: usize) -> DVector<f64> {
    let n = basis.nrows();
    loop {
        let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if used > 0 {
            for _ in 0..2 {
                let coeffs = basis.columns(0, used).tr_mul(&v);
                v -= basis.columns(0, used) * coeffs;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            return v / nrm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
        (m.transpose() * m - DMatrix::identity(m.ncols(), m.ncols())).amax()
    }

    #[test]
    fn svd_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let f = jacobi_svd(&a).unwrap();
        assert_eq!(f.values.as_slice(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn svd_reconstructs_rectangular() {
        let a = DMatrix::from_fn(4, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5 + 0.1 * j as f64);
        let f = jacobi_svd(&a).unwrap();
        let rec = &f.left * DMatrix::from_diagonal(&f.values) * f.right.transpose();
        assert!((rec - &a).amax() < 1e-12);
        assert!(orthonormality_error(&f.left) < 1e-10);
        assert!(orthonormality_error(&f.right) < 1e-10);
        assert!(f.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_rank_deficient_keeps_orthonormal_left() {
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let v = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let a = &u * v.transpose();
        let f = jacobi_svd(&a).unwrap();
        assert!(orthonormality_error(&f.left) < 1e-10);
        assert!(f.values[1] < 1e-12);
    }

    #[test]
    fn eigen_reconstructs() {
        let b = DMatrix::from_fn(7, 7, |i, j| ((i * 3 + j * 5) % 11) as f64 - 5.0);
        let a = &b + b.transpose();
        let f = symmetric_eigen(&a).unwrap();
        let rec = &f.left * DMatrix::from_diagonal(&f.values) * f.left.transpose();
        assert!((rec - &a).amax() < 1e-10);
        assert!(orthonormality_error(&f.left) < 1e-10);
        assert!(f.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigen_small_sizes() {
        let one = DMatrix::from_element(1, 1, -2.0);
        assert_eq!(symmetric_eigen(&one).unwrap().values[0], -2.0);
        let two = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        let f = symmetric_eigen(&two).unwrap();
        assert_eq!(f.values.as_slice(), &[2.0, -1.0]);
    }

    #[test]
    fn lanczos_matches_full_decomposition() {
        let n = 120;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let d = (i as f64 - j as f64).abs();
            0.5 + 0.5 * (-0.05 * d).exp()
        });
        let top = top_eigenpairs(&a, 5, 1e-12, 7).unwrap();
        let full = symmetric_eigen(&a).unwrap();
        for i in 0..5 {
            assert!((top.values[i] - full.values[i]).abs() < 1e-9 * full.values[0]);
            let r = &a * top.left.column(i) - top.left.column(i) * top.values[i];
            assert!(r.norm() < 1e-9 * full.values[0]);
        }
    }

    #[test]
    fn lanczos_handles_exact_low_rank() {
        let n = 100;
        let u = DMatrix::from_fn(n, 2, |i, j| ((i + 1) as f64 * (j + 1) as f64).sin());
        let a = &u * u.transpose();
        let top = top_eigenpairs(&a, 4, 1e-12, 1).unwrap();
        assert!(top.values[2].abs() < 1e-8);
        assert!(top.values[3].abs() < 1e-8);
        let rec = &top.left * DMatrix::from_diagonal(&top.values) * top.left.transpose();
        assert!((rec - &a).amax() < 1e-8);
    }
}
