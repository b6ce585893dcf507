//! Convex recovery programs: the regularized nuclear-norm program (primary),
//! its constrained counterpart, and the vector basis-pursuit analogue, each
//! returning a first-order optimality certificate.

mod bpdn;
mod nnm;
mod problem;
mod rnnm;

pub use bpdn::solve_bpdn;
pub use nnm::solve_nnm_constrained;
pub use problem::{
    check_optimality, OptimalityCertificate, RecoveryProblem, SolverOptions, SolverResult,
    VectorCertificate, VectorSolverResult,
};
pub use rnnm::solve_rnnm;
