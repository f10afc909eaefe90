use geopd_core::geometric::{
    project_box_switching, project_disjunctive, project_sparse, psd_lowrank_project, truncated_svd_project,
};
use geopd_core::{BoxSwitching, GeometricSet, Polyhedron};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vec_strategy(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-10.0..10.0f64, n).prop_map(DVector::from_vec)
}

fn mat_strategy(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-5.0..5.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

fn sparse_by_enumeration(x: &DVector<f64>, s: usize) -> f64 {
    subsets(x.len(), s)
        .iter()
        .map(|support| {
            (0..x.len())
                .filter(|i| !support.contains(i))
                .map(|i| x[i] * x[i])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn psd_oracle(m: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let e = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for &i in idx.iter().take(rank) {
        let l = e.eigenvalues[i].max(0.0);
        let v = e.eigenvectors.column(i);
        out += l * v * v.transpose();
    }
    out
}

fn interval(lo: f64, hi: f64) -> Polyhedron {
    Polyhedron::new(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), DVector::from_vec(vec![hi, -lo])).unwrap()
}

fn random_box() -> Polyhedron {
    let n = 3;
    let mut a = DMatrix::zeros(2 * n, n);
    let mut b = DVector::zeros(2 * n);
    for i in 0..n {
        a[(2 * i, i)] = 1.0;
        a[(2 * i + 1, i)] = -1.0;
        b[2 * i] = 1.0 + i as f64;
        b[2 * i + 1] = 0.5;
    }
    Polyhedron::new(a, b).unwrap()
}

fn triangle() -> Polyhedron {
    let a = DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 1.0, 1.0]);
    let b = DVector::from_vec(vec![-2.0, -2.0, 1.0]);
    Polyhedron::new(a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sparse_projection_matches_enumeration(x in (2usize..=10).prop_flat_map(vec_strategy), s in 1usize..10) {
        let s = s.min(x.len() - 1);
        let p = project_sparse(&x, s).unwrap();
        let dist = (&p - &x).norm_squared();
        prop_assert!((dist - sparse_by_enumeration(&x, s)).abs() <= 1e-10 * (1.0 + dist));
        prop_assert!(p.iter().filter(|v| **v != 0.0).count() <= s);
    }

    #[test]
    fn box_switching_matches_two_branch_search(
        x in -5.0..5.0f64, y in -5.0..5.0f64,
        lx in -3.0..0.0f64, ux in 0.0..3.0f64, ly in -3.0..0.0f64, uy in 0.0..3.0f64,
    ) {
        let one = |v: f64| DVector::from_element(1, v);
        let set = BoxSwitching::new(one(lx), one(ux), one(ly), one(uy)).unwrap();
        let (px, py) = project_box_switching(&one(x), &one(y), &set).unwrap();
        let branch_x = (x.clamp(lx, ux), 0.0);
        let branch_y = (0.0, y.clamp(ly, uy));
        let d = |p: (f64, f64)| (p.0 - x).powi(2) + (p.1 - y).powi(2);
        let best = d(branch_x).min(d(branch_y));
        prop_assert!((d((px[0], py[0])) - best).abs() <= 1e-12);
        prop_assert!(px[0] * py[0] == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn low_rank_residual_is_tail_energy(m in mat_strategy(6, 4), rank in 1usize..4) {
        let p = truncated_svd_project(&m, rank).unwrap();
        let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let tail: f64 = sv[rank..].iter().map(|s| s * s).sum();
        let resid = (&m - &p).norm_squared();
        prop_assert!((resid - tail).abs() <= 1e-8 * tail.max(1.0));
        let rank_p = p.svd(false, false).singular_values.iter().filter(|s| **s > 1e-9).count();
        prop_assert!(rank_p <= rank);
    }

    #[test]
    fn psd_low_rank_matches_eigen_oracle(m in mat_strategy(7, 7), rank in 1usize..7) {
        let sym = (&m + m.transpose()) * 0.5;
        let p = psd_lowrank_project(&sym, rank).unwrap();
        let oracle = psd_oracle(&sym, rank);
        prop_assert!(((&sym - &p).norm() - (&sym - &oracle).norm()).abs() <= 1e-8 * sym.norm().max(1.0));
        prop_assert!(p.clone().symmetric_eigen().eigenvalues.min() >= -1e-8);
    }

    #[test]
    fn projections_are_idempotent(v in vec_strategy(16), m in mat_strategy(4, 4)) {
        let sym = (&m + m.transpose()) * 0.5;
        let packed = geopd_core::problem::pack_symmetric(&sym);
        let sets = [
            (GeometricSet::Sparsity { n: 16, s: 5 }, v.clone()),
            (GeometricSet::LowRank { rows: 4, cols: 4, rank: 2 }, v.clone()),
            (GeometricSet::PsdLowRank { n: 4, rank: 2, packed: true }, packed),
            (
                GeometricSet::BoxSwitching(
                    BoxSwitching::new(
                        DVector::from_element(8, -1.0),
                        DVector::from_element(8, 2.0),
                        DVector::from_element(8, -3.0),
                        DVector::from_element(8, 0.5),
                    )
                    .unwrap(),
                ),
                v.clone(),
            ),
            (GeometricSet::Disjunctive(vec![random_box(), triangle()]), v.rows(0, 3).into_owned()),
        ];
        for (set, x) in sets {
            let p = set.project(&x).unwrap();
            let pp = set.project(&p).unwrap();
            prop_assert!((&pp - &p).norm() <= 1e-10 * p.norm().max(1.0), "{:?}", set);
            prop_assert!(set.contains(&p, 1e-8).unwrap());
        }
    }

    #[test]
    fn disjunctive_is_closest_member(x in vec_strategy(3)) {
        let members = vec![random_box(), triangle()];
        let p = project_disjunctive(&x, &members).unwrap();
        let best = members
            .iter()
            .map(|m| (m.project(&x).unwrap() - &x).norm())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(((&p - &x).norm() - best).abs() <= 1e-12);
    }
}

#[test]
fn lanczos_path_agrees_with_full_eigen() {
    let n = 90;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = (i as f64 - j as f64).abs();
        0.6 + 0.4 * (-0.1 * d).exp() + if i == j { 0.0 } else { 0.01 * ((i * j) as f64).sin() }
    });
    let sym = (&m + m.transpose()) * 0.5;
    for rank in [1, 5, 12] {
        let p = psd_lowrank_project(&sym, rank).unwrap();
        let oracle = psd_oracle(&sym, rank);
        assert!((&p - &oracle).norm() <= 1e-8 * sym.norm(), "rank {rank}");
    }
}

#[test]
fn union_of_intervals_picks_nearest() {
    let members = vec![interval(-3.0, -1.0), interval(2.0, 4.0)];
    let at = |v: f64| project_disjunctive(&DVector::from_element(1, v), &members).unwrap()[0];
    assert_eq!(at(0.0), -1.0);
    assert_eq!(at(1.0), 2.0);
    assert_eq!(at(0.5), -1.0);
    assert_eq!(at(10.0), 4.0);
}
