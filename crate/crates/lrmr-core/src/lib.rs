//! Low-rank matrix recovery toolkit.
//!
//! Recovers a low-rank matrix X from linear measurements b = A(X) + n via
//! nuclear-norm programs, evaluates the closed-form recovery constants that
//! govern when recovery is guaranteed, estimates restricted isometry
//! constants, and runs seeded verification campaigns that check the recovery
//! bounds on every solved instance.

pub mod error;
pub mod fileio;
pub mod harness;
pub mod linalg;
pub mod ric;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use harness::{ExperimentConfig, TrialRecord};
pub use linalg::{DenseMatrix, MeasurementEnsemble, SvdFactors};
pub use ric::RicEstimate;
pub use solvers::{RecoveryProblem, SolverOptions, SolverResult};
pub use theory::{TheoryBounds, TheoryParams};
