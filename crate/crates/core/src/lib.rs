//! Schur block product on matrices with operator entries, its explicit
//! Stinespring factorization `A □ B = V* λ(A) F λ(B) V`, and numerical
//! checkers for the identities and inequalities that follow from it.
//!
//! ```
//! use schurblock::{schur_block_product, spectral_norm, Ensemble, RandomSpec, StinespringSystem};
//!
//! # fn main() -> schurblock::Result<()> {
//! let mut sampler = RandomSpec::new(7, Ensemble::GinibreComplex).sampler();
//! let (a, b) = (sampler.block_matrix(3, 2), sampler.block_matrix(3, 2));
//! let direct = schur_block_product(&a, &b)?.flatten();
//! let factored = StinespringSystem::new(3, 2).flip_form(&a, &b)?;
//! let gap = spectral_norm(&(&direct - &factored), 1e-12)?;
//! assert!(gap <= 1e-12);
//! # Ok(())
//! # }
//! ```

pub mod blockmat;
pub mod error;
pub mod linalg;
pub mod random;
pub mod stinespring;
pub mod suite;
pub mod verify;

pub use blockmat::{
    block_matmul, col_norm, diag_block, lift_schur_k, row_norm, schur_block_product, BlockMatrix,
    Lift,
};
pub use error::{Error, Result};
pub use linalg::{adjoint, hermitian_min_eig, kron, matmul, spectral_norm, Operator};
pub use num_complex::Complex64;
pub use random::{random_operator, Ensemble, OperatorSampler, RandomSpec};
pub use stinespring::{
    build_flip, build_isometry, build_lambda, build_projection, build_rho, build_sigma,
    kronecker_block_product, StinespringSystem,
};
pub use suite::{run_suite, InstanceFile, PropertyId, TrialConfig, VerificationReport};
pub use verify::PropertyResult;
