//! Structured description of a zoo instance, as read from JSON configs.

use geopd_core::error::Result;
use geopd_core::Problem;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::correlation::{correlation_start, gen_correlation, CorrelationVariant};
use crate::disjunctive::DisjunctiveInstance;
use crate::multitask::gen_multitask_logistic;
use crate::qp::{
    beck_eldar_data, gen_beck_eldar, gen_portfolio, gen_sparse_qp, oracle_portfolio_global, oracle_sparse_qp_global,
    random_quadratic, ORACLE_MAX_DIM,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ZooSpec {
    SparseQp {
        n: usize,
        n_cond: f64,
        s: usize,
        #[serde(default = "one")]
        nu: f64,
        #[serde(default)]
        seed: u64,
    },
    BeckEldar,
    Portfolio {
        n: usize,
        n_cond: f64,
        s: usize,
        #[serde(default = "one")]
        nu: f64,
        #[serde(default)]
        seed: u64,
    },
    Correlation {
        variant: CorrelationVariant,
        n: usize,
        rank: usize,
    },
    MultitaskLogistic {
        tasks: usize,
        dim: usize,
        samples: usize,
        rank: usize,
        eta: f64,
        #[serde(default)]
        seed: u64,
    },
    DisjunctiveLogistic {
        n: usize,
        members: usize,
        #[serde(default = "twelve")]
        rows: usize,
        #[serde(default = "one_usize")]
        constraints: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn twelve() -> usize {
    12
}

/// A built problem together with its default starting point.
pub struct Instance {
    pub spec: ZooSpec,
    pub problem: Problem,
    pub x0: DVector<f64>,
}

impl ZooSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ZooSpec::SparseQp { .. } => "sparse_qp",
            ZooSpec::BeckEldar => "beck_eldar",
            ZooSpec::Portfolio { .. } => "portfolio",
            ZooSpec::Correlation { .. } => "correlation",
            ZooSpec::MultitaskLogistic { .. } => "multitask_logistic",
            ZooSpec::DisjunctiveLogistic { .. } => "disjunctive_logistic",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ZooSpec::SparseQp { seed, .. }
            | ZooSpec::Portfolio { seed, .. }
            | ZooSpec::MultitaskLogistic { seed, .. }
            | ZooSpec::DisjunctiveLogistic { seed, .. } => Some(*seed),
            ZooSpec::BeckEldar | ZooSpec::Correlation { .. } => None,
        }
    }

    /// Same instance family with another seed; deterministic families are
    /// returned unchanged.
    pub fn with_seed(&self, new_seed: u64) -> ZooSpec {
        let mut out = self.clone();
        match &mut out {
            ZooSpec::SparseQp { seed, .. }
            | ZooSpec::Portfolio { seed, .. }
            | ZooSpec::MultitaskLogistic { seed, .. }
            | ZooSpec::DisjunctiveLogistic { seed, .. } => *seed = new_seed,
            ZooSpec::BeckEldar | ZooSpec::Correlation { .. } => {}
        }
        out
    }

    pub fn build(&self) -> Result<Instance> {
        let (problem, x0) = match *self {
            ZooSpec::SparseQp { n, n_cond, s, nu, seed } => (gen_sparse_qp(n, n_cond, s, nu, seed)?, DVector::zeros(n)),
            ZooSpec::BeckEldar => (gen_beck_eldar(), DVector::zeros(5)),
            ZooSpec::Portfolio { n, n_cond, s, nu, seed } => (
                gen_portfolio(n, n_cond, s, nu, seed)?,
                DVector::from_element(n, 1.0 / n as f64),
            ),
            ZooSpec::Correlation { variant, n, rank } => {
                (gen_correlation(variant, n, rank)?, correlation_start(variant, n))
            }
            ZooSpec::MultitaskLogistic {
                tasks,
                dim,
                samples,
                rank,
                eta,
                seed,
            } => (
                gen_multitask_logistic(tasks, dim, samples, rank, eta, seed)?,
                DVector::zeros(3 * tasks * dim),
            ),
            ZooSpec::DisjunctiveLogistic {
                n,
                members,
                rows,
                constraints,
                seed,
            } => {
                let inst = DisjunctiveInstance::generate(n, members, rows, constraints, seed)?;
                let name = format!("disjunctive_n{n}_N{members}_s{rows}_m{constraints}_seed{seed}");
                (inst.problem(name)?, DVector::zeros(n))
            }
        };
        Ok(Instance {
            spec: self.clone(),
            problem,
            x0,
        })
    }

    /// Certified global optimum for the families with an exhaustive oracle.
    pub fn global_optimum(&self) -> Result<Option<(f64, DVector<f64>)>> {
        Ok(match *self {
            ZooSpec::SparseQp { n, n_cond, s, nu, seed } if n <= ORACLE_MAX_DIM => {
                let (q, c) = random_quadratic(n, n_cond, seed);
                Some(oracle_sparse_qp_global(&q, &(nu * c), s)?)
            }
            ZooSpec::BeckEldar => {
                let (q, c) = beck_eldar_data();
                Some(oracle_sparse_qp_global(&q, &c, 2)?)
            }
            ZooSpec::Portfolio { n, n_cond, s, nu, seed } if n <= ORACLE_MAX_DIM => {
                let (q, c) = random_quadratic(n, n_cond, seed);
                Some(oracle_portfolio_global(&q, &(nu * c), s)?)
            }
            ZooSpec::DisjunctiveLogistic {
                n,
                members,
                rows,
                constraints,
                seed,
            } => {
                let inst = DisjunctiveInstance::generate(n, members, rows, constraints, seed)?;
                let (f, x, _) = inst.enumeration_oracle()?;
                Some((f, x))
            }
            _ => None,
        })
    }
}
