//! The acceptance suite: each criterion runs at its stated tolerance and
//! reports a single verdict line.

use std::fmt;
use std::time::Instant;

use geopd_core::geometric::{project_box_switching, project_disjunctive, psd_lowrank_project, truncated_svd_project};
use geopd_core::problem::{pack_symmetric, unpack_symmetric};
use geopd_core::{
    feasibility_stationarity_check, AlmParams, BoxSwitching, DirectionConfig, GeometricSet, PdParams,
    Polyhedron, RunRecord, SolverKind, Status,
};
use geopd_zoo::qp::subsets;
use geopd_zoo::{penalty_gradient_error, stream, CorrelationVariant, ZooSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::json;

use crate::config::{BenchConfig, GridEntry, SolverParams, StartRule};
use crate::runner::{run_grid, run_one};

pub const BECK_ELDAR_GLOBAL: f64 = -41.33;
pub const CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Out of scope by definition.
    Excluded,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub verdict: Verdict,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Excluded => "SKIP",
        };
        write!(f, "{tag} [{}] {}: {} ({:.1}s)", self.id, self.title, self.detail, self.seconds)
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "Beck-Eldar global convergence, tau0 = 0.1",
        2 => "Beck-Eldar stationary levels, tau0 = 100",
        3 => "nearest low-rank correlation matrices",
        4 => "sparse QP against the enumeration oracle",
        5 => "disjunctive logistic regression against enumeration",
        6 => "penalty gradients against finite differences",
        7 => "projection properties",
        8 => "algorithmic invariants",
        9 => "real-data experiments and wall-clock timings",
        _ => "unknown criterion",
    }
}

pub fn run_criterion(id: u8, threads: usize) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match id {
        1 => beck_eldar_global(threads),
        2 => beck_eldar_levels(threads),
        3 => correlation(),
        4 => sparse_qp_oracle(),
        5 => disjunctive(),
        6 => gradients(),
        7 => projections(),
        8 => invariants(),
        9 => {
            return Outcome {
                id,
                title: title(id),
                verdict: Verdict::Excluded,
                detail: "needs proprietary data and specific hardware".into(),
                seconds: 0.0,
            }
        }
        _ => (false, format!("no criterion {id}")),
    };
    Outcome {
        id,
        title: title(id),
        verdict: if passed { Verdict::Pass } else { Verdict::Fail },
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn pd_params(value: serde_json::Value, solver: SolverKind) -> PdParams {
    match SolverParams::resolve(solver, &value, 1e9).expect("acceptance parameters are valid") {
        SolverParams::Pd(p) => p,
        _ => unreachable!(),
    }
}

fn beck_eldar_grid(tau0: f64, solvers: &[SolverKind]) -> BenchConfig {
    BenchConfig {
        grid: solvers
            .iter()
            .map(|&solver| GridEntry {
                problem: ZooSpec::BeckEldar,
                solver,
                overrides: json!({"tau0": tau0, "alpha_tau": 1.1}),
                replications: 1000,
                seed_base: 2024,
                start: StartRule::Uniform { lo: -10.0, hi: 10.0 },
            })
            .collect(),
        output_dir: None,
        time_limit_secs: 60.0,
    }
}

fn beck_eldar_global(threads: usize) -> (bool, String) {
    let solvers = [SolverKind::Pd, SolverKind::Pdlm];
    let outcome = match run_grid(&beck_eldar_grid(0.1, &solvers), threads) {
        Ok(o) => o,
        Err(e) => return (false, e.to_string()),
    };
    let mut parts = Vec::new();
    let mut ok = outcome.failures.is_empty();
    for solver in solvers {
        let runs: Vec<&RunRecord> = outcome.records.iter().filter(|r| r.solver == solver).collect();
        let hits = runs
            .iter()
            .filter(|r| (r.objective - BECK_ELDAR_GLOBAL).abs() <= 1e-2)
            .count();
        ok &= hits == 1000;
        parts.push(format!("{solver} {hits}/1000 at -41.33"));
    }
    (ok, parts.join(", "))
}

/// Groups values that lie within `tol` of their neighbour.
pub fn levels(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for x in v {
        match out.last_mut() {
            Some((_, count)) if x - last <= tol => *count += 1,
            _ => out.push((x, 1)),
        }
        last = x;
    }
    out
}

fn beck_eldar_levels(threads: usize) -> (bool, String) {
    let outcome = match run_grid(&beck_eldar_grid(100.0, &[SolverKind::Pd]), threads) {
        Ok(o) => o,
        Err(e) => return (false, e.to_string()),
    };
    let f: Vec<f64> = outcome.records.iter().map(|r| r.objective).collect();
    let lv = levels(&f, 1e-2);
    let near = |t: f64| f.iter().any(|x| (x - t).abs() <= 1e-2);
    let ok = outcome.records.len() == 1000 && lv.len() >= 3 && near(-39.0) && near(-36.33);
    let shown: Vec<String> = lv.iter().map(|(v, c)| format!("{v:.2} x{c}")).collect();
    (ok, format!("pd levels: {}", shown.join(", ")))
}

fn correlation() -> (bool, String) {
    let params = pd_params(
        json!({
            "tau0": 1.0,
            "alpha_tau": 1.2,
            "tau_cap": 1e12,
            "multipliers": "constraints_only",
            "inner": {"steps_per_block": 20, "eps_solv": 1e-3},
            "direction": DirectionConfig::nonlinear_cg(),
        }),
        SolverKind::Pdlm,
    );
    let cases = [
        (CorrelationVariant::P1, 5, 183.7, 0.005 * 183.7),
        (CorrelationVariant::P2, 10, 1703.1, 0.005 * 1703.1),
        (CorrelationVariant::P3, 20, 8.5, 0.5),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (variant, rank, target, tol) in cases {
        let n = 200;
        let spec = ZooSpec::Correlation { variant, n, rank };
        let r = match run_one(&spec, SolverKind::Pdlm, &SolverParams::Pd(params.clone()), None) {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", variant.name()));
                continue;
            }
        };
        let y = unpack_symmetric(&r.point, n);
        let ev = y.clone().symmetric_eigen().eigenvalues;
        let numeric_rank = ev.iter().filter(|e| e.abs() > 1e-8).count();
        let min_ev = ev.min();
        let diag = (0..n).map(|i| (y[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
        let good = r.status == Status::Converged
            && (r.objective - target).abs() <= tol
            && r.residual <= 1e-4
            && diag <= 1e-4
            && numeric_rank <= rank
            && min_ev >= -1e-8;
        ok &= good;
        parts.push(format!(
            "{} f={:.3} (target {target}) residual {:.1e} diag {:.1e} rank {numeric_rank}/{rank} min eig {:.1e}",
            variant.name(),
            r.objective,
            r.residual,
            diag,
            min_ev
        ));
    }
    (ok, parts.join("; "))
}

pub fn sparse_qp_specs() -> Vec<ZooSpec> {
    let mut out = Vec::new();
    for (n_cond, seeds) in [(10.0, 0..10u64), (100.0, 100..110u64)] {
        for seed in seeds {
            out.push(ZooSpec::SparseQp {
                n: 10,
                n_cond,
                s: 3,
                nu: 5.0,
                seed,
            });
        }
    }
    out
}

fn stationarity_ok(spec: &ZooSpec, r: &RunRecord) -> bool {
    let Ok(inst) = spec.build() else { return false };
    let x = DVector::from_column_slice(&r.x);
    let y = DVector::from_column_slice(&r.point);
    matches!(feasibility_stationarity_check(&inst.problem, &x, &y), Ok((r1, r2)) if r1 <= 1e-4 && r2 <= 1e-4)
}

fn sparse_qp_oracle() -> (bool, String) {
    let pd = pd_params(json!({"tau0": 1.0, "alpha_tau": 1.1}), SolverKind::Pd);
    let pdlm = pd_params(
        json!({"tau0": 1.0, "alpha_tau": 1.1, "eps_out": 1e-8, "inner": {"eps_in": 1e-10}}),
        SolverKind::Pdlm,
    );
    let specs = sparse_qp_specs();
    let (mut pd_above, mut pdlm_hits, mut stationary, mut no_oracle) = (0, 0, 0, 0);
    for spec in &specs {
        let oracle = spec.global_optimum().ok().flatten();
        let a = run_one(spec, SolverKind::Pd, &SolverParams::Pd(pd.clone()), None);
        let b = run_one(spec, SolverKind::Pdlm, &SolverParams::Pd(pdlm.clone()), None);
        if let (Ok(a), Ok(b)) = (&a, &b) {
            if stationarity_ok(spec, a) && stationarity_ok(spec, b) {
                stationary += 1;
            }
        }
        let Some((f_star, _)) = oracle else {
            no_oracle += 1;
            continue;
        };
        let tol = 1e-9 * f_star.abs().max(1.0);
        if matches!(&a, Ok(r) if r.status == Status::Converged && r.objective >= f_star - tol) {
            pd_above += 1;
        }
        if matches!(&b, Ok(r) if r.status == Status::Converged && (r.objective - f_star).abs() <= 1e-6 * f_star.abs().max(1.0)) {
            pdlm_hits += 1;
        }
    }
    let total = specs.len();
    let ok = pd_above == total && pdlm_hits >= 15 && stationary == total;
    (
        ok,
        format!(
            "pd >= f* on {pd_above}/{total}, pdlm at f* on {pdlm_hits}/{total} (need 15), \
             stationarity residuals <= 1e-4 on {stationary}/{total}, oracle unavailable on {no_oracle}"
        ),
    )
}

pub fn disjunctive_specs() -> Vec<ZooSpec> {
    (0..10u64)
        .map(|seed| ZooSpec::DisjunctiveLogistic {
            n: 10,
            members: [2, 5, 10][(seed % 3) as usize],
            rows: 12,
            constraints: 1,
            seed,
        })
        .collect()
}

fn disjunctive() -> (bool, String) {
    let pd = pd_params(
        json!({"tau0": 0.1, "alpha_tau": 1.2, "inner": {"eps_in": 0.01}}),
        SolverKind::Pdlm,
    );
    let alm = AlmParams {
        tau0: 1.0,
        alpha_tau: 1.2,
        eps_in: 0.01,
        spectral: geopd_core::SpectralParams {
            memory: 4,
            sigma: 0.01,
            ..Default::default()
        },
        ..Default::default()
    };
    let (mut matched, mut more_projections) = (0, 0);
    let mut misses = Vec::new();
    for spec in disjunctive_specs() {
        let seed = spec.seed().unwrap_or_default();
        let oracle = spec.global_optimum().ok().flatten();
        let a = run_one(&spec, SolverKind::Pdlm, &SolverParams::Pd(pd.clone()), None);
        let b = run_one(&spec, SolverKind::Alm, &SolverParams::Alm(alm.clone()), None);
        if let (Some((f_star, _)), Ok(a)) = (oracle, &a) {
            if (a.objective - f_star).abs() <= 1e-3 * f_star.abs().max(1.0) {
                matched += 1;
            } else {
                misses.push(format!("seed {seed}: pd {:.3} vs {f_star:.3}", a.objective));
            }
        }
        match (&a, &b) {
            (Ok(a), Ok(b)) if b.projections > a.projections => more_projections += 1,
            (Ok(a), Ok(b)) => misses.push(format!(
                "seed {seed}: alm projections {} vs pd {}",
                b.projections, a.projections
            )),
            _ => misses.push(format!("seed {seed}: a solver returned an error")),
        }
    }
    let ok = matched >= 9 && more_projections == 10;
    let mut detail = format!("pd matches enumeration on {matched}/10 (need 9), alm uses more projections on {more_projections}/10 (need 10)");
    if !misses.is_empty() {
        detail.push_str(&format!("; {}", misses.join("; ")));
    }
    (ok, detail)
}

pub fn gradient_families() -> Vec<ZooSpec> {
    vec![
        ZooSpec::SparseQp {
            n: 12,
            n_cond: 10.0,
            s: 3,
            nu: 5.0,
            seed: 4,
        },
        ZooSpec::BeckEldar,
        ZooSpec::Portfolio {
            n: 10,
            n_cond: 5.0,
            s: 3,
            nu: 1.0,
            seed: 2,
        },
        ZooSpec::Correlation {
            variant: CorrelationVariant::P2,
            n: 12,
            rank: 3,
        },
        ZooSpec::MultitaskLogistic {
            tasks: 4,
            dim: 3,
            samples: 15,
            rank: 2,
            eta: 0.5,
            seed: 3,
        },
        ZooSpec::DisjunctiveLogistic {
            n: 6,
            members: 3,
            rows: 12,
            constraints: 2,
            seed: 1,
        },
    ]
}

fn uniform(rng: &mut impl Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
}

fn gradients() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut checks = 0;
    for spec in gradient_families() {
        let Ok(inst) = spec.build() else {
            return (false, format!("could not build {}", spec.family()));
        };
        let p = &inst.problem;
        let n = p.dim();
        let m = p.constraint().map(|c| c.map.output_dim());
        let mut rng = stream(606, n as u64);
        for _ in 0..20 {
            let x = uniform(&mut rng, n, 1.0);
            let y = uniform(&mut rng, n, 1.0);
            let tau = 0.1 + 10.0 * rng.random::<f64>();
            let mu = uniform(&mut rng, n, 2.0);
            let mut cases = vec![(None, None), (None, Some(mu.clone()))];
            if let Some(m) = m {
                let lambda = uniform(&mut rng, m, 2.0);
                cases.push((Some(lambda.clone()), None));
                cases.push((Some(lambda), Some(mu)));
            }
            for (l, u) in cases {
                match penalty_gradient_error(p, tau, &x, &y, l, u) {
                    Ok(c) => worst = worst.max(c.relative_error),
                    Err(e) => return (false, format!("{}: {e}", p.name)),
                }
                checks += 1;
            }
        }
    }
    (worst <= 1e-6, format!("{checks} checks over 6 families, worst relative error {worst:.1e}"))
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
        let v = e.eigenvectors.column(i);
        out += e.eigenvalues[i].max(0.0) * v * v.transpose();
    }
    out
}

fn sample_members(rng: &mut impl Rng) -> Vec<Polyhedron> {
    (0..3)
        .map(|_| {
            let center = uniform(rng, 3, 3.0);
            let a = DMatrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0));
            let b = &a * &center + DVector::from_fn(6, |_, _| rng.random_range(0.2..1.0));
            Polyhedron::new(a, b).expect("rows are finite")
        })
        .collect()
}

fn projections() -> (bool, String) {
    let mut rng = stream(707, 0);
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |what: &str| {
        if failures.len() < 5 {
            failures.push(what.to_string());
        }
    };

    for _ in 0..1000 {
        let n = rng.random_range(2..=10);
        let s = rng.random_range(1..n);
        let x = uniform(&mut rng, n, 10.0);
        let set = GeometricSet::Sparsity { n, s };
        let p = set.project(&x).expect("valid sparse projection");
        let d = (&p - &x).norm_squared();
        if (d - sparse_by_enumeration(&x, s)).abs() > 1e-10 * (1.0 + d) {
            fail("sparse projection differs from enumeration");
        }
    }

    for _ in 0..1000 {
        let (lx, ux, ly, uy) = (
            rng.random_range(-3.0..0.0),
            rng.random_range(0.0..3.0),
            rng.random_range(-3.0..0.0),
            rng.random_range(0.0..3.0),
        );
        let (x, y): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let one = |v: f64| DVector::from_element(1, v);
        let set = BoxSwitching::new(one(lx), one(ux), one(ly), one(uy)).expect("valid boxes");
        let (px, py) = project_box_switching(&one(x), &one(y), &set).expect("valid pair");
        let d = |a: f64, b: f64| (a - x).powi(2) + (b - y).powi(2);
        let best = d(x.clamp(lx, ux), 0.0).min(d(0.0, y.clamp(ly, uy)));
        if (d(px[0], py[0]) - best).abs() > 1e-12 {
            fail("box-switching projection differs from the two-branch search");
        }
    }

    for _ in 0..200 {
        let (r, c) = (rng.random_range(2..8), rng.random_range(2..8));
        let rank = rng.random_range(1..r.min(c));
        let m = DMatrix::from_fn(r, c, |_, _| rng.random_range(-5.0..5.0));
        let p = truncated_svd_project(&m, rank).expect("valid rank");
        let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let tail: f64 = sv[rank..].iter().map(|s| s * s).sum();
        if ((&m - &p).norm_squared() - tail).abs() > 1e-8 * tail.max(1.0) {
            fail("low-rank residual differs from the tail singular-value energy");
        }
        let k = rng.random_range(2..9);
        let sq = DMatrix::from_fn(k, k, |_, _| rng.random_range(-5.0..5.0));
        let sym = (&sq + sq.transpose()) * 0.5;
        let rank = rng.random_range(1..k);
        let p = psd_lowrank_project(&sym, rank).expect("valid rank");
        if ((&sym - &p).norm() - (&sym - psd_oracle(&sym, rank)).norm()).abs() > 1e-8 * sym.norm().max(1.0) {
            fail("PSD low-rank projection differs from the eigenvalue oracle");
        }
    }

    for _ in 0..200 {
        let members = sample_members(&mut rng);
        let x = uniform(&mut rng, 3, 6.0);
        let p = project_disjunctive(&x, &members).expect("nonempty members");
        let best = members
            .iter()
            .map(|m| (m.project(&x).expect("nonempty member") - &x).norm())
            .fold(f64::INFINITY, f64::min);
        if ((&p - &x).norm() - best).abs() > 1e-12 * best.max(1.0) {
            fail("disjunctive projection is not the closest member projection");
        }
    }

    for _ in 0..200 {
        let v = uniform(&mut rng, 16, 10.0);
        let sq = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-5.0..5.0));
        let members = sample_members(&mut rng);
        let sets = [
            (GeometricSet::Sparsity { n: 16, s: 5 }, v.clone()),
            (GeometricSet::LowRank { rows: 4, cols: 4, rank: 2 }, v.clone()),
            (
                GeometricSet::PsdLowRank { n: 4, rank: 2, packed: true },
                pack_symmetric(&((&sq + sq.transpose()) * 0.5)),
            ),
            (
                GeometricSet::BoxSwitching(
                    BoxSwitching::new(
                        DVector::from_element(8, -1.0),
                        DVector::from_element(8, 2.0),
                        DVector::from_element(8, -3.0),
                        DVector::from_element(8, 0.5),
                    )
                    .expect("valid boxes"),
                ),
                v.clone(),
            ),
            (GeometricSet::Disjunctive(members), v.rows(0, 3).into_owned()),
        ];
        for (set, x) in sets {
            let p = set.project(&x).expect("valid projection");
            let pp = set.project(&p).expect("valid projection");
            if (&pp - &p).norm() > 1e-10 * p.norm().max(1.0) {
                fail("projection is not idempotent");
            }
        }
    }

    let ok = failures.is_empty();
    let detail = if ok {
        "sparse and box-switching against brute force (1000 each), low-rank and PSD spectra, disjunctive minimum, \
         idempotence of all five sets"
            .to_string()
    } else {
        failures.join("; ")
    };
    (ok, detail)
}

fn invariant_specs() -> Vec<(ZooSpec, SolverKind)> {
    let mut out = Vec::new();
    for seed in 0..4 {
        let qp = ZooSpec::SparseQp {
            n: 10,
            n_cond: 10.0,
            s: 3,
            nu: 5.0,
            seed,
        };
        out.push((qp.clone(), SolverKind::Pd));
        out.push((qp, SolverKind::Pdlm));
        out.push((
            ZooSpec::Portfolio {
                n: 10,
                n_cond: 5.0,
                s: 3,
                nu: 1.0,
                seed,
            },
            SolverKind::Pdlm,
        ));
    }
    for seed in 0..3 {
        out.push((
            ZooSpec::DisjunctiveLogistic {
                n: 6,
                members: 3,
                rows: 12,
                constraints: 1,
                seed,
            },
            SolverKind::Pd,
        ));
    }
    out.push((
        ZooSpec::Correlation {
            variant: CorrelationVariant::P3,
            n: 20,
            rank: 3,
        },
        SolverKind::Pdlm,
    ));
    out.push((
        ZooSpec::MultitaskLogistic {
            tasks: 4,
            dim: 3,
            samples: 20,
            rank: 1,
            eta: 0.5,
            seed: 0,
        },
        SolverKind::Pd,
    ));
    out
}

/// Violations of the per-iteration invariants in one recorded run.
pub fn invariant_violations(set: &GeometricSet, r: &RunRecord, eps_out: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (k, it) in r.iterates.iter().enumerate() {
        let q = &it.q_history;
        for (j, w) in q.windows(2).enumerate() {
            let last = j + 2 == q.len();
            if (!last && w[1] >= w[0]) || (last && w[1] > w[0]) {
                out.push(format!("outer {k}: q did not decrease at inner step {j}"));
                break;
            }
        }
        let y = DVector::from_column_slice(&it.y);
        if !set.contains(&y, 1e-8).unwrap_or(false) {
            out.push(format!("outer {k}: y left D"));
        }
    }
    for (k, c) in r.certificates.iter().enumerate() {
        if !(c.identity_residual <= 1e-10) {
            out.push(format!("outer {k}: certificate identity off by {:.1e}", c.identity_residual));
        }
    }
    if r.status == Status::Converged {
        match r.certificates.last() {
            Some(c) if c.z_norm <= eps_out => {}
            _ => out.push("final ||z|| above the outer tolerance".into()),
        }
    }
    out
}

fn invariants() -> (bool, String) {
    let mut runs = 0;
    let mut problems = Vec::new();
    for (spec, solver) in invariant_specs() {
        let params = pd_params(json!({"keep_iterates": true}), solver);
        let Ok(inst) = spec.build() else {
            problems.push(format!("could not build {}", spec.family()));
            continue;
        };
        match run_one(&spec, solver, &SolverParams::Pd(params.clone()), None) {
            Ok(r) => {
                runs += 1;
                for v in invariant_violations(inst.problem.set(), &r, params.eps_out) {
                    problems.push(format!("{} {solver}: {v}", r.problem));
                }
            }
            Err(e) => problems.push(format!("{}: {e}", inst.problem.name)),
        }
    }
    let ok = problems.is_empty();
    let detail = if ok {
        format!("{runs} runs: q decreasing, y in D, certificate identity within 1e-10, ||z|| within tolerance")
    } else {
        problems.into_iter().take(5).collect::<Vec<_>>().join("; ")
    };
    (ok, detail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::relative_gap;

    #[test]
    fn level_grouping() {
        let lv = levels(&[-41.333, -41.3331, -39.0, -36.33, -39.001, f64::NAN], 1e-2);
        assert_eq!(lv.len(), 3);
        assert_eq!(lv[0].1, 2);
        assert_eq!(lv[1], (-39.001, 2));
    }

    #[test]
    fn gap_example_from_stationary_level() {
        let g = relative_gap(-39.0, BECK_ELDAR_GLOBAL);
        assert!((g - 2.33 / 41.33).abs() < 1e-12);
        assert!((g - 0.0564).abs() < 1e-4);
    }
}
