//! Singular value machinery: one-sided Jacobi SVD, best rank-k approximation,
//! and the singular value thresholding (SVT) operator.
//!
//! One-sided Jacobi is used because at the toolkit's working scale
//! (dimensions up to ~64) it is deterministic, simple, and delivers high
//! relative accuracy; there is no need for blocked or randomized methods.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, norm2, DenseMatrix};

/// Compact SVD `X = U diag(s) V^T` with `p = min(rows, cols)` triplets.
///
/// Singular values are sorted nonincreasing; the first nonzero coordinate of
/// every left vector is nonnegative so factorizations are reproducible.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `rows x p`, orthonormal columns.
    pub left_vectors: DenseMatrix,
    /// Length `p`, nonincreasing, all `>= 0`.
    pub singular_values: Vec<f64>,
    /// `cols x p`, orthonormal columns.
    pub right_vectors: DenseMatrix,
}

impl SvdFactors {
    /// Number of singular triplets.
    pub fn p(&self) -> usize {
        self.singular_values.len()
    }

    /// Recompose `sum_i s_i u_i v_i^T`, optionally with modified singular values.
    pub fn recompose_with(&self, values: &[f64]) -> DenseMatrix {
        let rows = self.left_vectors.rows();
        let cols = self.right_vectors.rows();
        let mut out = DenseMatrix::zeros(rows, cols);
        for (idx, &s) in values.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for i in 0..rows {
                let us = s * self.left_vectors.get(i, idx);
                if us == 0.0 {
                    continue;
                }
                for j in 0..cols {
                    let v = out.get(i, j) + us * self.right_vectors.get(j, idx);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn recompose(&self) -> DenseMatrix {
        self.recompose_with(&self.singular_values)
    }
}

const MAX_SWEEPS: usize = 64;
const PAIR_TOL: f64 = 1e-15;
// Columns with norm below this fraction of the largest singular value are
// treated as a zero singular subspace and their left vectors rebuilt by
// orthonormal completion; their directions carry no reliable information.
const ZERO_COLUMN_REL: f64 = 1e-13;

/// Compact SVD via one-sided Jacobi rotations.
pub fn svd(x: &DenseMatrix) -> Result<SvdFactors> {
    if !x.is_finite() {
        return Err(Error::NonFinite { context: "svd input" });
    }
    let transposed = x.rows() < x.cols();
    let work = if transposed { x.transpose() } else { x.clone() };
    let (u, s, v) = one_sided_jacobi(&work)?;
    let (mut left, mut right) = if transposed { (v, u) } else { (u, v) };
    fix_signs(&mut left, &mut right);
    Ok(SvdFactors {
        left_vectors: left,
        singular_values: s,
        right_vectors: right,
    })
}

/// One-sided Jacobi on an `m x n` matrix with `m >= n`.
/// Returns (U: m x n, s: n, V: n x n).
fn one_sided_jacobi(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);

    // Work on columns: b[j] is the j-th column of the rotated matrix.
    let mut b: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    let mut worst_rel = 0.0f64;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        worst_rel = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let app = dot(&b[p], &b[p]);
                let aqq = dot(&b[q], &b[q]);
                let apq = dot(&b[p], &b[q]);
                let scale = (app * aqq).sqrt();
                if scale == 0.0 {
                    continue;
                }
                let rel = apq.abs() / scale;
                worst_rel = worst_rel.max(rel);
                if rel <= PAIR_TOL {
                    continue;
                }
                // Jacobi rotation zeroing the (p, q) entry of the column Gram.
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut b, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence {
            sweeps: MAX_SWEEPS,
            off_diagonal: worst_rel,
            max_abs: a.max_abs(),
        });
    }

    // Singular values are the column norms; sort triplets nonincreasing,
    // breaking ties by original column index for determinism.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = b.iter().map(|col| norm2(col)).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let sigma_max = order.first().map(|&i| norms[i]).unwrap_or(0.0);
    let cutoff = sigma_max * ZERO_COLUMN_REL;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut s_sorted = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &idx in &order {
        s_sorted.push(norms[idx]);
        v_cols.push(v[idx].clone());
        if norms[idx] > cutoff && norms[idx] > 0.0 {
            u_cols.push(b[idx].iter().map(|x| x / norms[idx]).collect());
        } else {
            u_cols.push(Vec::new()); // completed below
        }
    }

    complete_orthonormal(&mut u_cols, m);

    let u = DenseMatrix::from_fn(m, n, |i, j| u_cols[j][i]);
    let vt = DenseMatrix::from_fn(n, n, |i, j| v_cols[j][i]);
    Ok((u, s_sorted, vt))
}

/// Apply the rotation [[c, s], [-s, c]] to columns p < q stored as rows of
/// a column-major working set.
fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let a = *xp;
        let b = *xq;
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

/// Fill empty slots with unit vectors orthogonal to every existing column:
/// take the coordinate direction with the largest residual after projecting
/// out the occupied columns, then re-orthogonalize once for stability.
fn complete_orthonormal(cols: &mut [Vec<f64>], dim: usize) {
    for j in 0..cols.len() {
        if !cols[j].is_empty() {
            continue;
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for cand in 0..dim {
            let mut e = vec![0.0; dim];
            e[cand] = 1.0;
            project_out(&mut e, cols);
            let nrm = norm2(&e);
            if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
                best = Some((nrm, e));
            }
        }
        let (nrm, mut e) = best.expect("dim >= 1");
        assert!(
            nrm > 1e-8,
            "orthonormal completion degenerate: residual {nrm}"
        );
        for ei in e.iter_mut() {
            *ei /= nrm;
        }
        project_out(&mut e, cols);
        let n2 = norm2(&e);
        for ei in e.iter_mut() {
            *ei /= n2;
        }
        cols[j] = e;
    }
}

fn project_out(e: &mut [f64], cols: &[Vec<f64>]) {
    for other in cols.iter().filter(|c| !c.is_empty()) {
        let proj = dot(e, other);
        for (ei, oi) in e.iter_mut().zip(other) {
            *ei -= proj * oi;
        }
    }
}

/// Flip triplet signs so the first nonzero coordinate of each left vector is
/// nonnegative.
fn fix_signs(left: &mut DenseMatrix, right: &mut DenseMatrix) {
    for j in 0..left.cols() {
        let mut flip = false;
        for i in 0..left.rows() {
            let e = left.get(i, j);
            if e.abs() > 1e-12 {
                flip = e < 0.0;
                break;
            }
        }
        if flip {
            for i in 0..left.rows() {
                let e = left.get(i, j);
                left.set(i, j, -e);
            }
            for i in 0..right.rows() {
                let e = right.get(i, j);
                right.set(i, j, -e);
            }
        }
    }
}

/// Best rank-`k` approximation in Frobenius norm (top-k singular triplets).
/// When `k` is at least the numerical rank the input is returned unchanged.
pub fn truncate_rank(x: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    if k == 0 {
        return Err(Error::out_of_domain("k", "rank cap must be >= 1"));
    }
    let f = svd(x)?;
    let sigma_max = f.singular_values.first().copied().unwrap_or(0.0);
    let numerical_rank = f
        .singular_values
        .iter()
        .filter(|&&s| s > sigma_max * 1e-12)
        .count();
    if k >= numerical_rank {
        return Ok(x.clone());
    }
    let mut vals = f.singular_values.clone();
    for v in vals.iter_mut().skip(k) {
        *v = 0.0;
    }
    Ok(f.recompose_with(&vals))
}

/// Singular value thresholding: the proximal operator of `tau * ||.||_*`.
/// Returns `sum_i max(s_i - tau, 0) u_i v_i^T`.
pub fn svt(y: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_with_nuclear(y, tau)?.0)
}

/// SVT together with the nuclear norm of the result (free from the same SVD).
pub fn svt_with_nuclear(y: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, f64)> {
    if tau < 0.0 {
        return Err(Error::out_of_domain("tau", "threshold must be >= 0"));
    }
    if tau == 0.0 {
        let f = svd(y)?; // still validates finiteness
        let nuc = f.singular_values.iter().sum();
        return Ok((y.clone(), nuc));
    }
    let f = svd(y)?;
    let vals: Vec<f64> = f
        .singular_values
        .iter()
        .map(|&s| (s - tau).max(0.0))
        .collect();
    let nuc = vals.iter().sum();
    Ok((f.recompose_with(&vals), nuc))
}

/// Sum of singular values.
pub fn nuclear_norm(x: &DenseMatrix) -> Result<f64> {
    Ok(svd(x)?.singular_values.iter().sum())
}

/// Largest singular value.
pub fn spectral_norm(x: &DenseMatrix) -> Result<f64> {
    Ok(svd(x)?.singular_values.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn assert_factors_valid(x: &DenseMatrix, f: &SvdFactors) {
        // nonincreasing, nonnegative
        for w in f.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(f.singular_values.iter().all(|&s| s >= 0.0));
        // reconstruction
        let err = f.recompose().sub(x).unwrap().fro_norm();
        assert!(
            err <= 1e-10 * x.fro_norm().max(1.0),
            "reconstruction error {err}"
        );
        // orthonormality
        for m in [&f.left_vectors, &f.right_vectors] {
            for a in 0..m.cols() {
                for b in a..m.cols() {
                    let d = dot(&m.column(a), &m.column(b));
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((d - want).abs() <= 1e-10, "gram[{a},{b}] = {d}");
                }
            }
        }
    }

    #[test]
    fn diagonal_example() {
        let x = DenseMatrix::diag(&[3.0, 1.0]);
        let f = svd(&x).unwrap();
        assert_eq!(f.singular_values, vec![3.0, 1.0]);
        assert_factors_valid(&x, &f);
    }

    #[test]
    fn zero_matrix() {
        let x = DenseMatrix::zeros(2, 2);
        let f = svd(&x).unwrap();
        assert_eq!(f.singular_values, vec![0.0, 0.0]);
        assert_factors_valid(&x, &f);
    }

    #[test]
    fn antidiagonal_has_equal_singular_values() {
        let x = DenseMatrix::new(2, 2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let f = svd(&x).unwrap();
        assert!((f.singular_values[0] - 2.0).abs() <= 1e-12);
        assert!((f.singular_values[1] - 2.0).abs() <= 1e-12);
        assert_factors_valid(&x, &f);
    }

    #[test]
    fn random_matrices_satisfy_invariants() {
        for seed in 0..100 {
            let rows = 1 + (seed as usize % 8);
            let cols = 1 + ((seed as usize / 8) % 8);
            let x = random_matrix(rows, cols, 1000 + seed);
            let f = svd(&x).unwrap();
            assert_factors_valid(&x, &f);
        }
    }

    #[test]
    fn rank_deficient_matrix() {
        // rank 1, needs orthonormal completion for the zero subspace
        let x = DenseMatrix::new(3, 3, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let f = svd(&x).unwrap();
        assert!((f.singular_values[0] - 3.0).abs() <= 1e-12);
        assert!(f.singular_values[1] <= 1e-12);
        assert_factors_valid(&x, &f);
    }

    #[test]
    fn deterministic_signs() {
        let x = random_matrix(5, 4, 7);
        let f1 = svd(&x).unwrap();
        let f2 = svd(&x).unwrap();
        assert_eq!(f1.left_vectors, f2.left_vectors);
        assert_eq!(f1.right_vectors, f2.right_vectors);
        for j in 0..f1.left_vectors.cols() {
            let first = (0..f1.left_vectors.rows())
                .map(|i| f1.left_vectors.get(i, j))
                .find(|e| e.abs() > 1e-12)
                .unwrap();
            assert!(first >= 0.0);
        }
    }

    #[test]
    fn truncate_keeps_top_values() {
        let x = DenseMatrix::diag(&[3.0, 1.0]);
        let t = truncate_rank(&x, 1).unwrap();
        assert!((t.get(0, 0) - 3.0).abs() <= 1e-12);
        assert!(t.get(1, 1).abs() <= 1e-12);

        let y = random_matrix(4, 4, 3);
        assert_eq!(truncate_rank(&y, 4).unwrap(), y);
    }

    #[test]
    fn truncate_matches_recomposition() {
        let x = random_matrix(3, 3, 42);
        let f = svd(&x).unwrap();
        let mut vals = f.singular_values.clone();
        vals[2] = 0.0;
        let expect = f.recompose_with(&vals);
        let got = truncate_rank(&x, 2).unwrap();
        assert!(got.sub(&expect).unwrap().fro_norm() <= 1e-10);
    }

    #[test]
    fn svt_examples() {
        let x = DenseMatrix::diag(&[3.0, 1.0]);
        let t = svt(&x, 1.0).unwrap();
        assert!((t.get(0, 0) - 2.0).abs() <= 1e-12);
        assert!(t.get(1, 1).abs() <= 1e-12);

        let y = random_matrix(4, 3, 9);
        assert_eq!(svt(&y, 0.0).unwrap(), y);

        let anti = DenseMatrix::new(2, 2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let shrunk = svt(&anti, 0.5).unwrap();
        let expect = DenseMatrix::new(2, 2, vec![0.0, 1.5, 1.5, 0.0]).unwrap();
        assert!(shrunk.sub(&expect).unwrap().fro_norm() <= 1e-10);
    }

    #[test]
    fn svt_is_prox_of_nuclear_norm() {
        // objective 0.5||Z - Y||_F^2 + tau||Z||_* is minimized by svt(Y, tau)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let y = DenseMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
            let tau = rng.gen_range(0.05..1.0);
            let z = svt(&y, tau).unwrap();
            let base =
                0.5 * z.sub(&y).unwrap().fro_norm().powi(2) + tau * nuclear_norm(&z).unwrap();
            for _ in 0..100 {
                let xi = DenseMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
                let xi = xi.scale(0.1 * rng.gen::<f64>() / xi.fro_norm().max(1e-12));
                let cand = z.add(&xi).unwrap();
                let val = 0.5 * cand.sub(&y).unwrap().fro_norm().powi(2)
                    + tau * nuclear_norm(&cand).unwrap();
                assert!(val + 1e-12 >= base);
            }
        }
    }

    #[test]
    fn nuclear_norm_dominates_frobenius() {
        for seed in 0..20 {
            let x = random_matrix(4, 5, 500 + seed);
            let nuc = nuclear_norm(&x).unwrap();
            assert!(nuc + 1e-12 >= x.fro_norm());
        }
    }

    #[test]
    fn nuclear_norm_triangle_inequality() {
        for seed in 0..20 {
            let a = random_matrix(4, 4, 600 + seed);
            let b = random_matrix(4, 4, 700 + seed);
            let lhs = nuclear_norm(&a.add(&b).unwrap()).unwrap();
            let rhs = nuclear_norm(&a).unwrap() + nuclear_norm(&b).unwrap();
            assert!(lhs <= rhs + 1e-10);
        }
    }
}
