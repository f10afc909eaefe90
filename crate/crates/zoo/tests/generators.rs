use geopd_zoo::qp::{random_quadratic, subsets};
use geopd_zoo::{stream, ZooSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn sparse_spec(seed: u64) -> ZooSpec {
    ZooSpec::SparseQp {
        n: 10,
        n_cond: 10.0,
        s: 3,
        nu: 1.0,
        seed,
    }
}

fn portfolio_spec(seed: u64) -> ZooSpec {
    ZooSpec::Portfolio {
        n: 8,
        n_cond: 4.0,
        s: 3,
        nu: 1.0,
        seed,
    }
}

fn probe(spec: &ZooSpec) -> f64 {
    let inst = spec.build().unwrap();
    let x = DVector::from_fn(inst.problem.dim(), |i, _| (i as f64 * 0.37).sin());
    inst.problem.objective_value(&x).unwrap()
}

#[test]
fn generators_are_deterministic_per_seed() {
    let specs = [
        sparse_spec(3),
        portfolio_spec(3),
        ZooSpec::MultitaskLogistic {
            tasks: 3,
            dim: 3,
            samples: 10,
            rank: 1,
            eta: 1.0,
            seed: 3,
        },
        ZooSpec::DisjunctiveLogistic {
            n: 5,
            members: 2,
            rows: 12,
            constraints: 1,
            seed: 3,
        },
    ];
    for spec in specs {
        assert_eq!(probe(&spec), probe(&spec), "{}", spec.family());
        assert_ne!(probe(&spec), probe(&spec.with_seed(4)), "{}", spec.family());
    }
}

#[test]
fn reflector_is_orthogonal_and_spectrum_is_kept() {
    for seed in 0..5 {
        let (q, _) = random_quadratic(12, 6.0, seed);
        let ev = q.clone().symmetric_eigen().eigenvalues;
        assert!((ev.max() / ev.min() - 6.0f64.exp()).abs() <= 1e-8 * 6.0f64.exp());
        let trace: f64 = (0..12).map(|i| (i as f64 / 11.0 * 6.0).exp()).sum();
        assert!((q.trace() - trace).abs() <= 1e-10 * trace);
        assert!((&q - q.transpose()).norm() == 0.0);
    }
}

fn random_sparse_point(rng: &mut impl Rng, n: usize, s: usize) -> DVector<f64> {
    let all = subsets(n, s);
    let support = &all[rng.random_range(0..all.len())];
    let mut x = DVector::zeros(n);
    for &i in support {
        x[i] = rng.random_range(-3.0..3.0);
    }
    x
}

fn random_sparse_simplex_point(rng: &mut impl Rng, n: usize, s: usize) -> DVector<f64> {
    let mut x = random_sparse_point(rng, n, s).map(f64::abs);
    if x.sum() == 0.0 {
        x[0] = 1.0;
    }
    let total = x.sum();
    x / total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sparse_oracle_lower_bounds_feasible_points(seed in 0u64..1000) {
        let spec = sparse_spec(seed);
        let (f_star, x_star) = spec.global_optimum().unwrap().unwrap();
        let p = spec.build().unwrap().problem;
        prop_assert!(p.set().contains(&x_star, 0.0).unwrap());
        prop_assert!((p.objective_value(&x_star).unwrap() - f_star).abs() <= 1e-9 * f_star.abs().max(1.0));
        let mut rng = stream(seed, 9);
        for _ in 0..200 {
            let x = random_sparse_point(&mut rng, 10, 3);
            prop_assert!(p.objective_value(&x).unwrap() >= f_star - 1e-9);
        }
    }

    #[test]
    fn portfolio_oracle_lower_bounds_feasible_points(seed in 0u64..1000) {
        let spec = portfolio_spec(seed);
        let (f_star, x_star) = spec.global_optimum().unwrap().unwrap();
        let p = spec.build().unwrap().problem;
        prop_assert!((x_star.sum() - 1.0).abs() <= 1e-10);
        prop_assert!(x_star.iter().all(|&v| v >= 0.0));
        prop_assert!(x_star.iter().filter(|&&v| v != 0.0).count() <= 3);
        let mut rng = stream(seed, 9);
        for _ in 0..200 {
            let x = random_sparse_simplex_point(&mut rng, 8, 3);
            prop_assert!(p.objective_value(&x).unwrap() >= f_star - 1e-9);
        }
    }
}

#[test]
fn disjunctive_oracle_beats_feasible_samples() {
    let spec = ZooSpec::DisjunctiveLogistic {
        n: 4,
        members: 3,
        rows: 12,
        constraints: 1,
        seed: 11,
    };
    let (f_star, x_star) = spec.global_optimum().unwrap().unwrap();
    let p = spec.build().unwrap().problem;
    assert!(p.set().contains(&x_star, 1e-6).unwrap());
    assert!(p.evaluate_constraints(&x_star).unwrap().1 <= 1e-6);
    let mut rng = stream(11, 9);
    let mut checked = 0;
    for _ in 0..5000 {
        let x = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        if p.set().contains(&x, 0.0).unwrap() && p.evaluate_constraints(&x).unwrap().1 == 0.0 {
            checked += 1;
            assert!(p.objective_value(&x).unwrap() >= f_star - 1e-8);
        }
    }
    assert!(checked > 0);
}

#[test]
fn correlation_targets_are_not_low_rank() {
    for variant in [
        geopd_zoo::CorrelationVariant::P1,
        geopd_zoo::CorrelationVariant::P2,
        geopd_zoo::CorrelationVariant::P3,
    ] {
        let a: DMatrix<f64> = variant.matrix(20);
        let ev = a.symmetric_eigen().eigenvalues;
        assert!(ev.iter().filter(|&&v| v > 1e-8).count() > 5);
    }
}
