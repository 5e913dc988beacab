//! Linear predictive clustering: partition samples into `K` groups, each
//! with its own ridge regression, minimizing the total regularized squared
//! error.
//!
//! The crate provides an exact branch-and-bound solver and an enumeration
//! oracle, the reduced formulations built on the shared inverse
//! `(α_k XᵀX + λI)⁻¹` (solved exactly by enumeration or branch-and-bound at
//! small `N`, and by local search beyond), the greedy alternating baseline,
//! a k-means-then-regress baseline, evaluation metrics, synthetic
//! generators and CSV ingestion.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the usual `f64` instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod objective;
pub mod regression;
pub mod scalar;
pub mod solvers;
pub mod types;

pub use error::{ErrorCategory, LpcError, Result};
pub use objective::BoundReport;
pub use regression::{QpboInstance, RegressionCache};
pub use scalar::Scalar;
pub use solvers::{Method, SolverConfig};
pub use types::{AlphaVector, Assignment, CoefKind, CoefficientSet, Dataset, SolveReport, SolveStatus};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type CoefficientSet64 = CoefficientSet<f64>;
pub type AlphaVector64 = AlphaVector<f64>;
pub type SolveReport64 = SolveReport<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type RegressionCache64 = RegressionCache<f64>;
pub type QpboInstance64 = QpboInstance<f64>;
pub type BoundReport64 = BoundReport<f64>;
