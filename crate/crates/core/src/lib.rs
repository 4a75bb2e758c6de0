//! Principal loading analysis, OLS-based variable discarding, and the
//! perturbation conditions linking the two.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case. The simulation
//! harness runs in `f64` only.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod index_set;
pub mod linalg;
pub mod ols;
pub mod perturbation;
pub mod pla;
pub mod scalar;
pub mod simulation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type SymmetricMatrix64 = linalg::SymmetricMatrix<f64>;
pub type Vector64 = linalg::Vector<f64>;
pub type EigenSystem64 = linalg::EigenSystem<f64>;
pub type PlaReport64 = pla::PlaReport<f64>;
pub type OlsFit64 = ols::OlsFit<f64>;
pub type JointMoments64 = perturbation::JointMoments<f64>;
pub type PerturbationSplit64 = perturbation::PerturbationSplit<f64>;
pub type CorrelationSplit64 = perturbation::CorrelationSplit<f64>;
pub type TauBounds64 = perturbation::TauBounds<f64>;

pub type Matrix32 = linalg::Matrix<f32>;
pub type SymmetricMatrix32 = linalg::SymmetricMatrix<f32>;
pub type Vector32 = linalg::Vector<f32>;
