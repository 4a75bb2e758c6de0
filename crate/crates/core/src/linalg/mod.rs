//! Dense symmetric linear algebra and sample-moment estimation.

mod cholesky;
mod eigen;
mod matrix;
mod stats;

pub use cholesky::{inverse_spd, solve_spd, Cholesky, MAX_CONDITION};
pub use eigen::{eigh, EigenSystem, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use matrix::{Matrix, MatrixNorms, SymmetricMatrix, Vector};
pub use stats::{
    check_centred, correlation_from_covariance, cosine_angle, mean_center, sample_covariance,
};
