use std::collections::HashMap;

use geopd_bench::profile::{optimum_from, GAP_TIE};
use geopd_bench::{performance_profile, relative_gap, relative_gap_distribution, FailureRule, Metric};
use geopd_core::record::SCHEMA_VERSION;
use geopd_core::{RunRecord, SolverKind, Status};
use proptest::prelude::*;

fn record(problem: &str, solver: SolverKind, seconds: f64, f: f64, status: Status) -> RunRecord {
    RunRecord {
        schema_version: SCHEMA_VERSION,
        problem: problem.into(),
        replication: 0,
        solver,
        params: serde_json::Value::Null,
        status,
        message: None,
        point: vec![],
        x: vec![],
        objective: f,
        objective_at_x: f,
        residual: 0.0,
        constraint_violation: 0.0,
        outer_iterations: 1,
        inner_iterations: 1,
        projections: (seconds * 10.0) as usize,
        seconds,
        history: vec![],
        certificates: vec![],
        feasibility_stationarity: None,
        iterates: vec![],
    }
}

fn ok(problem: &str, solver: SolverKind, seconds: f64) -> RunRecord {
    record(problem, solver, seconds, 0.0, Status::Converged)
}

#[test]
fn two_solvers_two_problems() {
    let recs = vec![
        ok("a", SolverKind::Pd, 1.0),
        ok("a", SolverKind::Alm, 2.0),
        ok("b", SolverKind::Pd, 2.0),
        ok("b", SolverKind::Alm, 1.0),
    ];
    let curves = performance_profile(&recs, Metric::Runtime, &FailureRule::NotConverged).unwrap();
    assert_eq!(curves.len(), 2);
    for c in curves {
        assert_eq!(c.rho(1.0), 0.5);
        assert_eq!(c.rho(2.0), 1.0);
        assert_eq!(c.points(), vec![(1.0, 0.5), (2.0, 1.0)]);
    }
}

#[test]
fn single_solver_is_always_best() {
    let recs = vec![ok("a", SolverKind::Pd, 3.0), ok("b", SolverKind::Pd, 7.0)];
    let curves = performance_profile(&recs, Metric::Runtime, &FailureRule::NotConverged).unwrap();
    assert_eq!(curves[0].rho(1.0), 1.0);
    assert_eq!(curves[0].rho(100.0), 1.0);
}

#[test]
fn failures_cap_the_curve() {
    let recs = vec![
        ok("a", SolverKind::Pd, 1.0),
        record("b", SolverKind::Pd, 0.1, 0.0, Status::IterationCap),
        ok("a", SolverKind::Alm, 2.0),
        ok("b", SolverKind::Alm, 2.0),
    ];
    let curves = performance_profile(&recs, Metric::Runtime, &FailureRule::NotConverged).unwrap();
    let pd = curves.iter().find(|c| c.solver == "pd").unwrap();
    assert_eq!(pd.rho(1e12), 0.5);
    assert_eq!(pd.failures, 1);
    let alm = curves.iter().find(|c| c.solver == "alm").unwrap();
    assert_eq!(alm.rho(1.0), 0.5);
    assert_eq!(alm.rho(2.0), 1.0);
}

#[test]
fn missing_the_global_minimum_is_a_failure() {
    let recs = vec![
        record("a", SolverKind::Pd, 1.0, -39.0, Status::Converged),
        record("a", SolverKind::Pdlm, 5.0, -41.33, Status::Converged),
    ];
    let optimum = HashMap::from([("a".to_string(), -41.33)]);
    let rule = FailureRule::MissedGlobal { optimum, tol: 1e-6 };
    let curves = performance_profile(&recs, Metric::Runtime, &rule).unwrap();
    let pd = curves.iter().find(|c| c.solver == "pd").unwrap();
    let pdlm = curves.iter().find(|c| c.solver == "pdlm").unwrap();
    assert_eq!(pd.rho(1e9), 0.0);
    assert_eq!(pdlm.rho(1.0), 1.0);
}

#[test]
fn disjoint_problem_sets_are_rejected() {
    let recs = vec![ok("a", SolverKind::Pd, 1.0), ok("b", SolverKind::Alm, 1.0)];
    assert!(performance_profile(&recs, Metric::Runtime, &FailureRule::NotConverged).is_err());
    assert!(performance_profile(&[], Metric::Runtime, &FailureRule::NotConverged).is_err());
}

#[test]
fn projection_metric() {
    let recs = vec![ok("a", SolverKind::Pd, 1.0), ok("a", SolverKind::Alm, 4.0)];
    let curves = performance_profile(&recs, Metric::Projections, &FailureRule::NotConverged).unwrap();
    let alm = curves.iter().find(|c| c.solver == "alm").unwrap();
    assert_eq!(alm.ratios, vec![4.0]);
}

#[test]
fn gap_examples() {
    assert_eq!(relative_gap(-41.33, -41.33), 0.0);
    assert!((relative_gap(-39.0, -41.33) - 0.0564).abs() < 1e-4);
    assert_eq!(relative_gap(-42.0, -41.33), 0.0);
    assert_eq!(relative_gap(1.0 + GAP_TIE / 2.0, 1.0), 0.0);
    assert!(relative_gap(1.0 + 4.0 * GAP_TIE, 1.0) > 0.0);
    assert_eq!(relative_gap(0.5, 0.0), 0.5);
}

#[test]
fn oracle_against_itself_has_zero_gaps() {
    let recs: Vec<RunRecord> = (0..4)
        .map(|i| record(&format!("p{i}"), SolverKind::EnumerationOracle, 0.0, i as f64 - 2.0, Status::Converged))
        .collect();
    let optimum = optimum_from(&recs, SolverKind::EnumerationOracle);
    let dist = relative_gap_distribution(&recs, &optimum).unwrap();
    assert_eq!(dist.len(), 1);
    assert!(dist[0].gaps.iter().all(|&g| g == 0.0));
    assert_eq!(dist[0].fraction_within(0.0), 1.0);
}

#[test]
fn gap_distribution_needs_every_oracle_value() {
    let recs = vec![ok("a", SolverKind::Pd, 1.0), ok("b", SolverKind::Pd, 1.0)];
    let optimum = HashMap::from([("a".to_string(), 0.0)]);
    assert!(relative_gap_distribution(&recs, &optimum).is_err());
}

/// Entries above 90 in `failed_when` mark failed runs.
fn grid(times: &[Vec<f64>], failed_when: &[Vec<f64>]) -> Vec<RunRecord> {
    let solvers = [SolverKind::Pd, SolverKind::Pdlm, SolverKind::Alm];
    let mut out = Vec::new();
    for (s, row) in times.iter().enumerate() {
        for (p, &t) in row.iter().enumerate() {
            let status = if failed_when[s][p] > 90.0 { Status::IterationCap } else { Status::Converged };
            out.push(record(&format!("p{p}"), solvers[s], t, 0.0, status));
        }
    }
    out
}

fn times() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..8).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0.01..100.0f64, n), 2..=3))
}

proptest! {
    #[test]
    fn curves_are_monotone_and_bounded(t in times()) {
        let curves = performance_profile(&grid(&t, &t), Metric::Runtime, &FailureRule::NotConverged).unwrap();
        for c in curves {
            let mut prev = 0.0;
            for tau in [1.0, 1.1, 1.5, 2.0, 5.0, 10.0, 100.0, 1e4] {
                let r = c.rho(tau);
                prop_assert!((0.0..=1.0).contains(&r));
                prop_assert!(r >= prev);
                prev = r;
            }
        }
    }

    #[test]
    fn curves_ignore_metric_scale(t in times(), scale in 0.01..100.0f64) {
        let scaled: Vec<Vec<f64>> = t.iter().map(|row| row.iter().map(|v| v * scale).collect()).collect();
        let a = performance_profile(&grid(&t, &t), Metric::Runtime, &FailureRule::NotConverged).unwrap();
        let b = performance_profile(&grid(&scaled, &t), Metric::Runtime, &FailureRule::NotConverged).unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            prop_assert_eq!(ca.failures, cb.failures);
            for (ra, rb) in ca.ratios.iter().zip(&cb.ratios) {
                prop_assert!((ra - rb).abs() <= 1e-9 * ra);
            }
        }
    }
}
