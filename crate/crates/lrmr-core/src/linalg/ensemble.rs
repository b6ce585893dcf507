//! The linear measurement map and its adjoint.
//!
//! A measurement ensemble is an explicit stack of m matrices A^(1..m); the
//! forward map sends X to the vector of Frobenius inner products <A^(i), X>
//! and the adjoint sends y to sum_i y_i A^(i). Ensembles are stored densely:
//! at the toolkit's working scale (m and n1*n2 up to a few thousand) this
//! keeps the adjoint identity exactly testable and Gram computations exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, norm2, DenseMatrix};

/// Stack of `m` measurement matrices, all `n1 x n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    n1: usize,
    n2: usize,
    matrices: Vec<DenseMatrix>,
}

impl MeasurementEnsemble {
    pub fn new(n1: usize, n2: usize, matrices: Vec<DenseMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::invalid(
                "measurement ensemble",
                "at least one measurement matrix is required",
            ));
        }
        for (i, a) in matrices.iter().enumerate() {
            if a.shape() != (n1, n2) {
                return Err(Error::DimensionMismatch {
                    context: "measurement ensemble construction",
                    expected: format!("{n1}x{n2}"),
                    got: format!("matrix {i} is {}x{}", a.rows(), a.cols()),
                });
            }
        }
        Ok(Self { n1, n2, matrices })
    }

    /// The coordinate (vectorization) ensemble: m = n1*n2 unit matrices in
    /// row-major order, so the forward map is exactly row-major vectorization.
    pub fn coordinate(n1: usize, n2: usize) -> Self {
        let mut matrices = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                let mut e = DenseMatrix::zeros(n1, n2);
                e.set(i, j, 1.0);
                matrices.push(e);
            }
        }
        Self { n1, n2, matrices }
    }

    /// Gaussian ensemble with i.i.d. N(0, 1/m) entries, deterministic per seed.
    pub fn gaussian(m: usize, n1: usize, n2: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("measurement count", "m must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = (1.0 / m as f64).sqrt();
        let matrices = (0..m)
            .map(|_| {
                DenseMatrix::from_fn(n1, n2, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    std * z
                })
            })
            .collect();
        Ok(Self { n1, n2, matrices })
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn matrices(&self) -> &[DenseMatrix] {
        &self.matrices
    }

    /// Every measurement matrix multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n1: self.n1,
            n2: self.n2,
            matrices: self.matrices.iter().map(|a| a.scale(c)).collect(),
        }
    }

    /// Ensemble with measurements reordered by `perm` (a permutation of 0..m).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m() {
            return Err(Error::invalid(
                "permutation",
                format!("length {} does not match m = {}", perm.len(), self.m()),
            ));
        }
        let matrices = perm
            .iter()
            .map(|&i| self.matrices[i].clone())
            .collect::<Vec<_>>();
        Self::new(self.n1, self.n2, matrices)
    }

    /// Forward map: component i is `tr(X^T A^(i)) = <A^(i), X>`.
    pub fn apply(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.shape() != (self.n1, self.n2) {
            return Err(Error::DimensionMismatch {
                context: "measurement map",
                expected: format!("{}x{}", self.n1, self.n2),
                got: format!("{}x{}", x.rows(), x.cols()),
            });
        }
        Ok(self
            .matrices
            .iter()
            .map(|a| dot(a.entries(), x.entries()))
            .collect())
    }

    /// Adjoint map: `sum_i y_i A^(i)`.
    pub fn adjoint(&self, y: &[f64]) -> Result<DenseMatrix> {
        if y.len() != self.m() {
            return Err(Error::DimensionMismatch {
                context: "adjoint map",
                expected: format!("{}", self.m()),
                got: format!("{}", y.len()),
            });
        }
        let mut out = DenseMatrix::zeros(self.n1, self.n2);
        for (a, &c) in self.matrices.iter().zip(y) {
            if c == 0.0 {
                continue;
            }
            out = out.add_scaled(c, a)?;
        }
        Ok(out)
    }

    /// Power-iteration estimate of `||A||^2`, the largest eigenvalue of
    /// `X -> A*(A(X))`. The Rayleigh quotient sequence is nondecreasing for
    /// this positive semidefinite operator; the final value is returned.
    /// Callers using it as a Lipschitz constant should multiply by a safety
    /// factor to absorb the residual underestimate.
    pub fn op_norm_sq(&self, iters: usize, seed: u64) -> f64 {
        let iters = iters.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DenseMatrix::from_fn(self.n1, self.n2, |_, _| {
            StandardNormal.sample(&mut rng)
        });
        let nrm = x.fro_norm();
        if nrm == 0.0 {
            return 0.0;
        }
        x = x.scale(1.0 / nrm);
        let mut rayleigh = 0.0;
        for _ in 0..iters {
            let ax = self.apply(&x).expect("shape fixed by construction");
            let tx = self.adjoint(&ax).expect("length fixed by construction");
            rayleigh = x.fro_dot(&tx).expect("same shape");
            let tn = tx.fro_norm();
            if tn == 0.0 {
                return 0.0;
            }
            x = tx.scale(1.0 / tn);
        }
        rayleigh
    }
}

/// Reshape a length `n1*n2` vector into an `n1 x n2` matrix (row-major),
/// the inverse of the coordinate ensemble's forward map.
pub fn reshape(v: &[f64], n1: usize, n2: usize) -> Result<DenseMatrix> {
    DenseMatrix::new(n1, n2, v.to_vec())
}

/// Euclidean norm of a measurement-space residual; re-exported here because
/// solver code reads better with a named helper.
pub fn residual_norm(b: &[f64], ax: &[f64]) -> f64 {
    let diff: Vec<f64> = b.iter().zip(ax).map(|(x, y)| x - y).collect();
    norm2(&diff)
}
