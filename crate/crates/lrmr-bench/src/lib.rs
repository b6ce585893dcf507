//! Shared input builders for the toolkit benchmarks.

use lrmr_core::harness::{gen_low_rank, hash64};
use lrmr_core::linalg::{DenseMatrix, MeasurementEnsemble};
use lrmr_core::solvers::RecoveryProblem;

/// Deterministic dense matrix with entries spread over (-1, 1).
pub fn dense_input(n: usize, seed: u64) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        let h = hash64(seed, (i * n + j) as u64);
        (h as f64 / u64::MAX as f64) * 2.0 - 1.0
    })
}

/// A planted rank-1 recovery instance on a Gaussian map.
pub fn planted_problem(n: usize, m: usize, lambda: f64, seed: u64) -> RecoveryProblem {
    let ens = MeasurementEnsemble::gaussian(m, n, n, hash64(seed, 1)).unwrap();
    let truth = gen_low_rank(n, n, 1, hash64(seed, 2)).unwrap();
    let b = ens.apply(&truth).unwrap();
    let mut p = RecoveryProblem::new(ens, b, lambda, 0.0).unwrap();
    p.set_truth(truth).unwrap();
    p
}
