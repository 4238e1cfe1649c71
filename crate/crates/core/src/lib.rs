//! Bilinear architecture search under a latency budget.
//!
//! The crate builds an interpretable accuracy estimator for a
//! stage/block/configuration search space by probing an accuracy oracle,
//! fits learned quadratic predictors for comparison, and solves the
//! latency-constrained selection problem with block-coordinate Frank-Wolfe,
//! evolutionary search and exact enumeration.
//!
//! Numerical code that only needs field arithmetic is generic over
//! [`Scalar`]; the aliases below fix it to `f64` for everyday use.

pub mod analysis;
pub mod bilinear;
pub mod error;
pub mod estimator;
pub mod io;
pub mod oracle;
pub mod predictors;
pub mod scalar;
pub mod solvers;
pub mod space;

pub use error::{Error, Result};
pub use estimator::{BilinearEstimator, BuildOptions, ConfigBaseline, ProbePlan, Term};
pub use oracle::{gen_latency, LatencyModel, LatencyRanges, OracleParams, SyntheticSupernet};
pub use scalar::Scalar;
pub use space::{ArchPoint, Architecture, SearchSpace};

/// Estimator over `f64`.
pub type Estimator = BilinearEstimator<f64>;
/// Search-space point over `f64`.
pub type Point = ArchPoint<f64>;
/// Latency table over `f64`.
pub type Latency = LatencyModel<f64>;
