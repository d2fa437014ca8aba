//! Dense complex linear algebra for per-subcarrier MMSE preprocessing:
//! Gram matrices, the diagonal/hollow Neumann split, truncated series
//! inversion, exact Cholesky inversion, and the unitary DFT.
//!
//! Everything here is a pure function of its inputs; values are `Send + Sync`
//! and safe to use from parallel sweeps.

mod cholesky;
pub mod counted;
mod dft;
mod matrix;
mod neumann;

pub use cholesky::{
    cholesky_decompose, invert_via_cholesky, solve_backward, solve_forward, LowerTriangular,
};
pub use counted::OpCountLedger;
pub use dft::{direct_transform, unitary_transform, Direction};
pub use matrix::{
    convergence_norm, diag_split, gram_matrix, regularized_gram, ComplexMatrix, DiagSplit,
};
pub use neumann::{neumann_inverse, neumann_inverse_by_sum};

/// Errors from the linear algebra kernels.
#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix dimension must be at least 1")]
    EmptyDimension,
    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("operation requires a square matrix")]
    NotSquare,
    #[error("regularizer must be non-negative, got {0}")]
    NegativeRegularizer(f64),
    #[error("diagonal entry {index} is not positive ({value}); D^-1 does not exist")]
    SingularDiagonal { index: usize, value: f64 },
    #[error("matrix is not positive definite (pivot {pivot_index})")]
    NotPositiveDefinite { pivot_index: usize },
    #[error("Neumann term count must be at least 1")]
    InvalidTermCount,
}
