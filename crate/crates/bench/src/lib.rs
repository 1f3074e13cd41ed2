//! Shared fixtures for the criterion benches.

use schurblock::{BlockMatrix, Ensemble, RandomSpec};

/// Two independent Ginibre block matrices of shape `(n, d)`.
pub fn instance_pair(n: usize, d: usize, seed: u64) -> (BlockMatrix, BlockMatrix) {
    let mut sampler = RandomSpec::new(seed, Ensemble::GinibreComplex).sampler();
    (sampler.block_matrix(n, d), sampler.block_matrix(n, d))
}
