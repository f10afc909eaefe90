use std::sync::Arc;

use geopd_core::problem::{AffineMap, Quadratic};
use geopd_core::{
    solve_pd, ConvexTarget, GeometricSet, MultiplierMode, PdParams, Problem, Shape, Status,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn spd(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_column_slice(n, n, &entries[..n * n]);
    b.tr_mul(&b) + DMatrix::identity(n, n)
}

fn sparse_qp(n: usize, s: usize, entries: &[f64], c: &[f64]) -> Problem {
    Problem::new(
        "sparse_qp",
        Shape::Vector { len: n },
        Arc::new(Quadratic {
            q: spd(n, entries),
            c: DVector::from_column_slice(&c[..n]),
        }),
        GeometricSet::Sparsity { n, s },
    )
    .unwrap()
}

fn simplex_qp(n: usize, s: usize, entries: &[f64], c: &[f64]) -> Problem {
    sparse_qp(n, s, entries, c)
        .with_constraint(
            Arc::new(AffineMap {
                m: DMatrix::identity(n, n),
                b: DVector::zeros(n),
            }),
            ConvexTarget::UnitSimplex { dim: n },
        )
        .unwrap()
}

fn check_run(problem: &Problem, params: &PdParams, x0: &DVector<f64>) -> Result<(), TestCaseError> {
    let record = solve_pd(problem, params, x0, None).unwrap();
    prop_assert_eq!(record.iterates.len(), record.outer_iterations);
    for it in &record.iterates {
        let q = &it.q_history;
        for (k, w) in q.windows(2).enumerate() {
            if k + 2 < q.len() {
                prop_assert!(w[1] < w[0], "q rose or stalled before the stop: {:?}", w);
            } else {
                prop_assert!(w[1] <= w[0]);
            }
        }
        let y = DVector::from_column_slice(&it.y);
        prop_assert!(problem.set().contains(&y, 0.0).unwrap());
    }
    for cert in &record.certificates {
        prop_assert!(cert.identity_residual <= 1e-10, "identity residual {}", cert.identity_residual);
    }
    if record.status == Status::Converged {
        prop_assert!(record.residual <= params.eps_out);
        prop_assert!(record.certificates.last().unwrap().z_norm <= params.eps_out);
    }
    Ok(())
}

fn params(multipliers: MultiplierMode) -> PdParams {
    PdParams {
        multipliers,
        keep_iterates: true,
        max_outer_iters: 400,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sparse_qp_invariants(
        entries in prop::collection::vec(-1.0..1.0f64, 36),
        c in prop::collection::vec(-3.0..3.0f64, 6),
        x0 in prop::collection::vec(-2.0..2.0f64, 6),
        s in 1usize..5,
        lm in any::<bool>(),
    ) {
        let p = sparse_qp(6, s, &entries, &c);
        let mode = if lm { MultiplierMode::Both } else { MultiplierMode::None };
        check_run(&p, &params(mode), &DVector::from_vec(x0))?;
    }

    #[test]
    fn simplex_qp_invariants(
        entries in prop::collection::vec(-1.0..1.0f64, 25),
        c in prop::collection::vec(-3.0..3.0f64, 5),
        s in 1usize..4,
        mode in prop::sample::select(vec![MultiplierMode::None, MultiplierMode::ConstraintsOnly, MultiplierMode::Both]),
    ) {
        let p = simplex_qp(5, s, &entries, &c);
        check_run(&p, &params(mode), &DVector::from_element(5, 0.2))?;
    }
}

#[test]
fn feasible_termination_meets_tolerance() {
    let entries: Vec<f64> = (0..25).map(|k| ((k * 13) as f64).sin()).collect();
    let c: Vec<f64> = (0..5).map(|k| ((k * 7) as f64).cos()).collect();
    let p = simplex_qp(5, 2, &entries, &c);
    let params = PdParams {
        multipliers: MultiplierMode::Both,
        ..Default::default()
    };
    let r = solve_pd(&p, &params, &DVector::from_element(5, 0.2), None).unwrap();
    assert_eq!(r.status, Status::Converged);
    let point = DVector::from_vec(r.point);
    assert!(p.set().contains(&point, 0.0).unwrap());
    assert!(r.constraint_violation <= params.eps_out);
}
