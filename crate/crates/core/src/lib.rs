//! Recovery of matrices that are simultaneously low-rank and jointly
//! row-sparse from undersampled per-column measurements.
//!
//! The pipeline has two steps: estimate the row subspace from measurements
//! shared by every column (eigendecomposition of the Gram matrix of the
//! common measurements), then solve for the coefficient matrix against that
//! subspace with an optional TV / joint-sparsity penalty. Brute-force
//! oracles (spark, restricted-isometry constants, uniqueness rank tests)
//! let the sampling-condition claims be checked at small scale.

pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
mod rng;
pub mod sampling;
pub mod solver;
pub mod subspace;
pub mod verify;

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;

pub use error::{Error, Result};
pub use model::{generate_phantom, GroundTruth, MatrixSignal, PhantomSpec, SkinnySVD};
pub use sampling::{CommonOperator, MeasurementSet, PerColumnOperators};
pub use solver::{AdmmParams, BlockSystem, RecoveryResult};
pub use subspace::SubspaceEstimate;
