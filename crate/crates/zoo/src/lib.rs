//! Seeded benchmark problem generators and exhaustive oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod correlation;
pub mod disjunctive;
pub mod gradcheck;
pub mod multitask;
pub mod qp;
pub mod spec;

pub use correlation::{gen_correlation, CorrelationVariant};
pub use disjunctive::{gen_disjunctive_logistic, DisjunctiveInstance};
pub use gradcheck::{penalty_gradient_error, GradCheck};
pub use multitask::gen_multitask_logistic;
pub use qp::{gen_beck_eldar, gen_portfolio, gen_sparse_qp, oracle_portfolio_global, oracle_sparse_qp_global};
pub use spec::{Instance, ZooSpec};

/// Independent random stream `id` of a seed. Every matrix of a generator
/// draws from its own stream so adding a draw to one leaves the others intact.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
