//! Low-rank multitask logistic regression on synthetic clustered tasks.
//!
//! Variables are `(W, U, V)`, each `tasks × dim` in column-major order,
//! stacked into one vector. The coupling `W = U + V` is the constraint and
//! `V` carries the rank bound.

use std::sync::Arc;

use geopd_core::error::{Error, Result};
use geopd_core::problem::{ConstraintMap, Objective, Shape};
use geopd_core::{ConvexTarget, GeometricSet, Problem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::stream;

#[derive(Debug, Clone)]
pub struct MultitaskData {
    pub tasks: usize,
    pub dim: usize,
    /// Per task: `samples × dim` features and `{0,1}` labels.
    pub features: Vec<DMatrix<f64>>,
    pub labels: Vec<DVector<f64>>,
    pub eta: f64,
}

impl MultitaskData {
    pub fn generate(tasks: usize, dim: usize, samples: usize, eta: f64, seed: u64) -> Self {
        let mut rc = stream(seed, 0);
        let centers: Vec<DVector<f64>> = (0..2)
            .map(|_| DVector::from_fn(dim, |_, _| 2.0 * rc.sample::<f64, _>(StandardNormal)))
            .collect();
        let mut rw = stream(seed, 1);
        let mut rx = stream(seed, 2);
        let mut rl = stream(seed, 3);
        let mut features = Vec::with_capacity(tasks);
        let mut labels = Vec::with_capacity(tasks);
        for t in 0..tasks {
            let w = &centers[t % 2] + DVector::from_fn(dim, |_, _| 0.1 * rw.sample::<f64, _>(StandardNormal));
            let x = DMatrix::from_fn(samples, dim, |_, _| rx.sample::<f64, _>(StandardNormal));
            let scores = &x * &w;
            let y = scores.map(|s| if rl.random::<f64>() < sigmoid(s) { 1.0 } else { 0.0 });
            features.push(x);
            labels.push(y);
        }
        Self {
            tasks,
            dim,
            features,
            labels,
            eta,
        }
    }

    fn block(&self) -> usize {
        self.tasks * self.dim
    }

    pub fn total_samples(&self) -> usize {
        self.labels.iter().map(|l| l.len()).sum()
    }
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eˢ)` without overflow.
pub fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Sum of binary cross-entropy losses of all tasks plus `η‖U‖²`.
pub struct MultitaskObjective {
    pub data: MultitaskData,
}

impl Objective for MultitaskObjective {
    fn dim(&self) -> usize {
        3 * self.data.block()
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let d = &self.data;
        let (m, n, b) = (d.tasks, d.dim, d.block());
        let mut grad = DVector::zeros(3 * b);
        let mut value = 0.0;
        for t in 0..m {
            let w = DVector::from_fn(n, |j, _| x[t + j * m]);
            let scores = &d.features[t] * &w;
            let mut resid = DVector::zeros(scores.len());
            for i in 0..scores.len() {
                value += softplus(scores[i]) - d.labels[t][i] * scores[i];
                resid[i] = sigmoid(scores[i]) - d.labels[t][i];
            }
            let gw = d.features[t].tr_mul(&resid);
            for j in 0..n {
                grad[t + j * m] = gw[j];
            }
        }
        for k in 0..b {
            let u = x[b + k];
            value += d.eta * u * u;
            grad[b + k] = 2.0 * d.eta * u;
        }
        (value, grad)
    }
}

/// `G(W, U, V) = W − U − V`.
#[derive(Debug, Clone)]
pub struct CouplingMap {
    pub block: usize,
}

impl ConstraintMap for CouplingMap {
    fn input_dim(&self) -> usize {
        3 * self.block
    }

    fn output_dim(&self) -> usize {
        self.block
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        let b = self.block;
        x.rows(0, b) - x.rows(b, b) - x.rows(2 * b, b)
    }

    fn adjoint_apply(&self, _x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let b = self.block;
        let mut out = DVector::zeros(3 * b);
        out.rows_mut(0, b).copy_from(w);
        out.rows_mut(b, b).copy_from(&(-w));
        out.rows_mut(2 * b, b).copy_from(&(-w));
        out
    }
}

pub fn gen_multitask_logistic(
    tasks: usize,
    dim: usize,
    samples: usize,
    rank: usize,
    eta: f64,
    seed: u64,
) -> Result<Problem> {
    if tasks < 2 || dim < 2 || rank == 0 || rank >= tasks.min(dim) || samples == 0 {
        return Err(Error::InvalidParameter(format!(
            "need tasks, dim >= 2, samples >= 1 and 1 <= rank < min(tasks, dim); got {tasks}, {dim}, {samples}, {rank}"
        )));
    }
    let data = MultitaskData::generate(tasks, dim, samples, eta, seed);
    let b = tasks * dim;
    let set = GeometricSet::Product(vec![
        GeometricSet::WholeSpace { dim: 2 * b },
        GeometricSet::low_rank(tasks, dim, rank)?,
    ]);
    Problem::new(
        format!("multitask_m{tasks}_n{dim}_k{rank}_eta{eta}_seed{seed}"),
        Shape::Vector { len: 3 * b },
        Arc::new(MultitaskObjective { data }),
        set,
    )?
    .with_constraint(Arc::new(CouplingMap { block: b }), ConvexTarget::SingletonZero { dim: b })
}
