//! Performance profiles and relative-gap distributions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use geopd_core::{RunRecord, Status};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Runtime,
    Projections,
}

impl Metric {
    fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Runtime => r.seconds,
            Metric::Projections => r.projections as f64,
        }
    }
}

/// Which runs count as failures (ratio `+∞`).
#[derive(Debug, Clone, PartialEq)]
pub enum FailureRule {
    /// Any status other than converged.
    NotConverged,
    /// Not converged, or the objective misses `f*` of its problem by more
    /// than `tol` in relative gap.
    MissedGlobal { optimum: HashMap<String, f64>, tol: f64 },
}

impl FailureRule {
    fn failed(&self, r: &RunRecord) -> Result<bool> {
        if r.status != Status::Converged {
            return Ok(true);
        }
        match self {
            FailureRule::NotConverged => Ok(false),
            FailureRule::MissedGlobal { optimum, tol } => {
                let f_star = optimum
                    .get(&r.problem)
                    .ok_or_else(|| BenchError::Profile(format!("no optimal value for {}", r.problem)))?;
                Ok(relative_gap(r.objective, *f_star) > *tol)
            }
        }
    }
}

/// Differences up to this size count as a tie with the optimum.
pub const GAP_TIE: f64 = 1e-12;

/// `(f − f*) / max(1, |f*|)`, zero when `f` is within [`GAP_TIE`] of `f*`
/// or below it.
pub fn relative_gap(f: f64, f_star: f64) -> f64 {
    if f - f_star <= GAP_TIE {
        0.0
    } else {
        (f - f_star) / f_star.abs().max(1.0)
    }
}

/// Step function `ρ(t)` of one solver, stored as sorted finite ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub solver: String,
    pub problems: usize,
    /// Finite performance ratios in ascending order.
    pub ratios: Vec<f64>,
    pub failures: usize,
}

impl ProfileCurve {
    pub fn rho(&self, t: f64) -> f64 {
        let hit = self.ratios.partition_point(|&r| r <= t);
        hit as f64 / self.problems as f64
    }

    /// Breakpoints `(t, ρ(t))` of the step function.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &r) in self.ratios.iter().enumerate() {
            let rho = (i + 1) as f64 / self.problems as f64;
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 = rho,
                _ => out.push((r, rho)),
            }
        }
        out
    }
}

type Key = (String, usize);

fn key(r: &RunRecord) -> Key {
    (r.problem.clone(), r.replication)
}

/// Dolan–Moré profiles over the problems that every solver attempted.
/// A problem keyed by `(name, replication)`; duplicates keep the last run.
pub fn performance_profile(records: &[RunRecord], metric: Metric, rule: &FailureRule) -> Result<Vec<ProfileCurve>> {
    let mut by_solver: BTreeMap<String, HashMap<Key, &RunRecord>> = BTreeMap::new();
    for r in records {
        by_solver.entry(r.solver.name().to_string()).or_default().insert(key(r), r);
    }
    if by_solver.is_empty() {
        return Err(BenchError::Profile("no records".into()));
    }
    let mut shared: Option<BTreeSet<Key>> = None;
    for runs in by_solver.values() {
        let keys: BTreeSet<Key> = runs.keys().cloned().collect();
        shared = Some(match shared {
            None => keys,
            Some(s) => s.intersection(&keys).cloned().collect(),
        });
    }
    let shared = shared.unwrap_or_default();
    if shared.is_empty() {
        return Err(BenchError::Profile("solvers share no problem".into()));
    }
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (solver, runs) in &by_solver {
        let mut v = Vec::with_capacity(shared.len());
        for k in &shared {
            let r = runs[k];
            v.push(if rule.failed(r)? { f64::INFINITY } else { metric.of(r) });
        }
        values.insert(solver, v);
    }
    let best: Vec<f64> = (0..shared.len())
        .map(|p| values.values().map(|v| v[p]).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(values
        .into_iter()
        .map(|(solver, v)| {
            let mut ratios: Vec<f64> = v
                .iter()
                .zip(&best)
                .map(|(&m, &b)| ratio(m, b))
                .filter(|r| r.is_finite())
                .collect();
            ratios.sort_by(f64::total_cmp);
            ProfileCurve {
                solver: solver.to_string(),
                problems: shared.len(),
                failures: shared.len() - ratios.len(),
                ratios,
            }
        })
        .collect())
}

fn ratio(m: f64, best: f64) -> f64 {
    if !m.is_finite() {
        f64::INFINITY
    } else if m == best {
        1.0
    } else if best <= 0.0 {
        f64::INFINITY
    } else {
        m / best
    }
}

/// Sorted gaps of one solver with their cumulative fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDistribution {
    pub solver: String,
    pub gaps: Vec<f64>,
}

impl GapDistribution {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.gaps.len() as f64;
        self.gaps.iter().enumerate().map(|(i, &g)| (g, (i + 1) as f64 / n)).collect()
    }

    pub fn fraction_within(&self, tol: f64) -> f64 {
        self.gaps.partition_point(|&g| g <= tol) as f64 / self.gaps.len() as f64
    }
}

pub fn relative_gap_distribution(
    records: &[RunRecord],
    optimum: &HashMap<String, f64>,
) -> Result<Vec<GapDistribution>> {
    let mut by_solver: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        let f_star = optimum
            .get(&r.problem)
            .ok_or_else(|| BenchError::Profile(format!("no optimal value for {}", r.problem)))?;
        by_solver
            .entry(r.solver.name().to_string())
            .or_default()
            .push(relative_gap(r.objective, *f_star));
    }
    Ok(by_solver
        .into_iter()
        .map(|(solver, mut gaps)| {
            gaps.sort_by(f64::total_cmp);
            GapDistribution { solver, gaps }
        })
        .collect())
}

/// Optimal values taken from the records of `solver` (usually the oracle).
pub fn optimum_from(records: &[RunRecord], solver: geopd_core::SolverKind) -> HashMap<String, f64> {
    records
        .iter()
        .filter(|r| r.solver == solver)
        .map(|r| (r.problem.clone(), r.objective))
        .collect()
}
