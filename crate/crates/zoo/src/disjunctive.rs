//! Logistic regression over a union of polyhedra with shared quartic
//! constraints, and the per-member enumeration oracle.

use std::sync::Arc;

use geopd_core::error::{Error, Result};
use geopd_core::problem::{ConstraintMap, Objective, Shape};
use geopd_core::{ConvexTarget, GeometricSet, Polyhedron, Problem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::multitask::{sigmoid, softplus};
use crate::stream;

pub const SAMPLES: usize = 200;
pub const THRESHOLD: f64 = 0.1;
const MAX_RESAMPLES: usize = 100;

/// Sum of logistic losses `Σ log(1 + e^{aᵢᵀx}) − bᵢ aᵢᵀx` with `bᵢ ∈ {0,1}`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
}

impl Objective for LogisticLoss {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let scores = &self.features * x;
        let mut value = 0.0;
        let mut resid = DVector::zeros(scores.len());
        for i in 0..scores.len() {
            value += softplus(scores[i]) - self.labels[i] * scores[i];
            resid[i] = sigmoid(scores[i]) - self.labels[i];
        }
        (value, self.features.tr_mul(&resid))
    }
}

/// `G_j(x) = Σ_i c_ij (x_i − p_ij)⁴`; columns of `c` and `p` index `j`.
#[derive(Debug, Clone)]
pub struct QuarticMap {
    pub c: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

impl ConstraintMap for QuarticMap {
    fn input_dim(&self) -> usize {
        self.c.nrows()
    }

    fn output_dim(&self) -> usize {
        self.c.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.c.ncols(), |j, _| {
            (0..x.len()).map(|i| self.c[(i, j)] * (x[i] - self.p[(i, j)]).powi(4)).sum()
        })
    }

    fn adjoint_apply(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            (0..self.c.ncols())
                .map(|j| w[j] * 4.0 * self.c[(i, j)] * (x[i] - self.p[(i, j)]).powi(3))
                .sum()
        })
    }
}

#[derive(Debug, Clone)]
pub struct DisjunctiveInstance {
    pub loss: LogisticLoss,
    pub quartic: QuarticMap,
    pub threshold: DVector<f64>,
    pub members: Vec<Polyhedron>,
}

impl DisjunctiveInstance {
    pub fn generate(n: usize, members: usize, rows: usize, constraints: usize, seed: u64) -> Result<Self> {
        if n == 0 || members == 0 || rows == 0 || constraints == 0 {
            return Err(Error::InvalidParameter("disjunctive sizes must be positive".into()));
        }
        let mut rf = stream(seed, 0);
        let mut rw = stream(seed, 1);
        let mut rl = stream(seed, 2);
        let features = DMatrix::from_fn(SAMPLES, n, |_, _| rf.sample::<f64, _>(StandardNormal));
        let truth = DVector::from_fn(n, |_, _| rw.sample::<f64, _>(StandardNormal));
        let scores = &features * &truth;
        let labels = scores.map(|s| if rl.random::<f64>() < sigmoid(s) { 1.0 } else { 0.0 });

        let mut rc = stream(seed, 3);
        let mut rp = stream(seed, 4);
        let c = DMatrix::from_fn(n, constraints, |_, _| rc.random_range(0.0..1.0));
        let p = DMatrix::from_fn(n, constraints, |_, _| rp.random_range(-0.5..0.5));
        let quartic = QuarticMap { c, p };
        let threshold = DVector::from_element(constraints, THRESHOLD);

        let mut ra = stream(seed, 5);
        for _ in 0..MAX_RESAMPLES {
            let mut polys = Vec::with_capacity(members);
            for _ in 0..members {
                polys.push(sample_polyhedron(&mut ra, n, rows)?);
            }
            let inst = Self {
                loss: LogisticLoss {
                    features: features.clone(),
                    labels: labels.clone(),
                },
                quartic: quartic.clone(),
                threshold: threshold.clone(),
                members: polys,
            };
            if inst.members.iter().any(|m| inst.strictly_feasible_point(m).is_some()) {
                return Ok(inst);
            }
        }
        Err(Error::InvalidParameter("could not sample a feasible instance".into()))
    }

    pub fn problem(&self, name: String) -> Result<Problem> {
        let n = self.loss.features.ncols();
        Problem::new(
            name,
            Shape::Vector { len: n },
            Arc::new(self.loss.clone()),
            GeometricSet::disjunctive(self.members.clone())?,
        )?
        .with_constraint(
            Arc::new(self.quartic.clone()),
            ConvexTarget::NonpositiveShifted {
                shift: self.threshold.clone(),
            },
        )
    }

    /// Inequalities `h(x) ≤ 0` describing the member intersected with the
    /// quartic constraints, with gradients and Hessians.
    fn inequalities(&self, member: &Polyhedron, x: &DVector<f64>) -> Vec<Smooth> {
        let n = x.len();
        let mut out = Vec::with_capacity(member.a.nrows() + self.threshold.len());
        for i in 0..member.a.nrows() {
            let row = member.a.row(i).transpose();
            out.push((row.dot(x) - member.b[i], row, DMatrix::zeros(n, n)));
        }
        let g = self.quartic.value(x);
        for j in 0..self.threshold.len() {
            let d = DVector::from_fn(n, |i, _| x[i] - self.quartic.p[(i, j)]);
            let grad = DVector::from_fn(n, |i, _| 4.0 * self.quartic.c[(i, j)] * d[i].powi(3));
            let hess = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 12.0 * self.quartic.c[(i, j)] * d[i] * d[i]));
            out.push((g[j] - self.threshold[j], grad, hess));
        }
        out
    }

    /// A strictly feasible point of the member, if one exists.
    fn strictly_feasible_point(&self, member: &Polyhedron) -> Option<DVector<f64>> {
        let n = member.dim();
        let x0 = member.project(&DVector::zeros(n)).ok()?;
        let worst = self
            .inequalities(member, &x0)
            .iter()
            .map(|h| h.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let z0 = x0.insert_row(n, worst + 1.0);
        // minimize s subject to h_i(x) ≤ s
        let objective = |z: &DVector<f64>| {
            let mut g = DVector::zeros(n + 1);
            g[n] = 1.0;
            (z[n], g, DMatrix::zeros(n + 1, n + 1))
        };
        let constraints = |z: &DVector<f64>| {
            let x = z.rows(0, n).into_owned();
            self.inequalities(member, &x)
                .into_iter()
                .map(|(v, g, h)| (v - z[n], g.insert_row(n, -1.0), h.insert_row(n, 0.0).insert_column(n, 0.0)))
                .collect::<Vec<_>>()
        };
        let z = barrier_minimize(objective, constraints, z0, Some(-1e-6));
        (z[n] < 0.0).then(|| z.rows(0, n).into_owned())
    }

    /// Global optimum by solving the convex problem restricted to every
    /// member and keeping the best: `(f*, x*, index of the member)`.
    pub fn enumeration_oracle(&self) -> Result<(f64, DVector<f64>, usize)> {
        let mut best: Option<(f64, DVector<f64>, usize)> = None;
        for (q, member) in self.members.iter().enumerate() {
            let Some(start) = self.strictly_feasible_point(member) else {
                continue;
            };
            let objective = |x: &DVector<f64>| {
                let (v, g) = self.loss.value_and_gradient(x);
                let scores = &self.loss.features * x;
                let mut weighted = self.loss.features.clone();
                for (i, mut row) in weighted.row_iter_mut().enumerate() {
                    let p = sigmoid(scores[i]);
                    row *= p * (1.0 - p);
                }
                (v, g, self.loss.features.tr_mul(&weighted))
            };
            let x = barrier_minimize(objective, |x: &DVector<f64>| self.inequalities(member, x), start, None);
            let f = self.loss.value(&x);
            if best.as_ref().is_none_or(|(bf, _, _)| f < *bf) {
                best = Some((f, x, q));
            }
        }
        best.ok_or_else(|| Error::InvalidParameter("no feasible member".into()))
    }
}

type Smooth = (f64, DVector<f64>, DMatrix<f64>);

/// Log-barrier interior point method with damped Newton centering for
/// `min f(x)` subject to `h_i(x) ≤ 0`, started strictly inside. The duality
/// gap bound at exit is below `1e-10`. With `stop_below` the run ends as soon
/// as `f` drops under that level.
fn barrier_minimize<F, H>(f: F, h: H, x0: DVector<f64>, stop_below: Option<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> Smooth,
    H: Fn(&DVector<f64>) -> Vec<Smooth>,
{
    let phi = |x: &DVector<f64>, t: f64| -> f64 {
        let mut v = t * f(x).0;
        for (hv, _, _) in h(x) {
            if hv.is_nan() || hv >= 0.0 {
                return f64::INFINITY;
            }
            v -= (-hv).ln();
        }
        v
    };
    let m = h(&x0).len() as f64;
    let mut x = x0;
    let mut t = 1.0;
    loop {
        for _ in 0..200 {
            let (_, gf, hf) = f(&x);
            let mut grad = t * gf;
            let mut hess = t * hf;
            for (hv, gh, hh) in h(&x) {
                let s = -hv;
                grad += &gh / s;
                hess += &gh * gh.transpose() / (s * s) + hh / s;
            }
            let n = hess.nrows();
            let reg = 1e-12 * hess.diagonal().amax().max(1.0);
            let step = match (hess + DMatrix::identity(n, n) * reg).cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => -grad.clone(),
            };
            let slope = grad.dot(&step);
            if -slope <= 1e-14 * (1.0 + t) {
                break;
            }
            let p0 = phi(&x, t);
            let mut alpha = 1.0;
            while alpha > 1e-16 && phi(&(&x + alpha * &step), t) > p0 + 0.25 * alpha * slope {
                alpha *= 0.5;
            }
            if alpha <= 1e-16 {
                break;
            }
            x += alpha * step;
            if stop_below.is_some_and(|level| f(&x).0 < level) {
                return x;
            }
        }
        if m / t < 1e-10 {
            return x;
        }
        t *= 10.0;
    }
}

fn sample_polyhedron(rng: &mut rand_chacha::ChaCha8Rng, n: usize, rows: usize) -> Result<Polyhedron> {
    for _ in 0..MAX_RESAMPLES {
        let a = DMatrix::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
        let poly = Polyhedron::new(a, b)?;
        match poly.project(&DVector::zeros(n)) {
            Ok(_) => return Ok(poly),
            Err(Error::InfeasiblePolyhedron) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InfeasiblePolyhedron)
}

pub fn gen_disjunctive_logistic(n: usize, members: usize, rows: usize, constraints: usize, seed: u64) -> Result<Problem> {
    let inst = DisjunctiveInstance::generate(n, members, rows, constraints, seed)?;
    inst.problem(format!("disjunctive_n{n}_N{members}_s{rows}_m{constraints}_seed{seed}"))
}
