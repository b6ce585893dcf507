//! Restricted isometry constant (RIC) estimation.
//!
//! The RIC of order k is the smallest delta with
//! `(1-delta) ||X||_F^2 <= ||A(X)||_2^2 <= (1+delta) ||X||_F^2` over all
//! matrices of rank at most k. Computing it exactly for matrix maps is
//! intractable, so this module reports honest lower bounds (Monte-Carlo
//! sampling, optionally sharpened by projected gradient ascent) and an exact
//! value for the vector/sparse setting where support enumeration is feasible.
//! Callers gating theory assertions on these estimates must add a declared
//! safety margin; see the harness.
//!
//! Non-integer orders are ceiled before estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::hash64;
use crate::linalg::{truncate_rank, DenseMatrix, MeasurementEnsemble};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Combinatorial caps for exact support enumeration.
const EXACT_MAX_N: usize = 20;
const EXACT_MAX_K: usize = 6;

/// Defaults for the ascent refinement.
pub const ASCENT_DEFAULT_STEPS: usize = 200;
const ASCENT_STEP_FRACTION: f64 = 0.05;
const ASCENT_POWER_ITERS: usize = 100;
const ASCENT_POWER_SEED: u64 = 0x52494331;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RicMethod {
    ExactEnumeration,
    MonteCarlo,
    McPlusAscent,
}

/// An RIC value together with how it was obtained. Sampling methods yield
/// lower bounds; only enumeration is exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RicEstimate {
    pub order: usize,
    pub value: f64,
    pub method: RicMethod,
    pub samples: usize,
    pub is_exact: bool,
    pub is_lower_bound: bool,
}

/// Exact sparse-setting RIC of a design matrix: the largest deviation of the
/// Gram spectrum from identity over all column supports of size k,
/// `delta_k = max_{|S|=k} max(lmax(A_S^T A_S) - 1, 1 - lmin(A_S^T A_S))`.
pub fn exact_sparse_ric(a: &DenseMatrix, k: usize) -> Result<RicEstimate> {
    let n = a.cols();
    if k == 0 {
        return Err(Error::out_of_domain("k", "need k >= 1"));
    }
    if n > EXACT_MAX_N || k > EXACT_MAX_K {
        return Err(Error::SizeCap {
            message: format!(
                "exact enumeration supports n <= {EXACT_MAX_N} and k <= {EXACT_MAX_K}, \
                 got n = {n}, k = {k}"
            ),
        });
    }
    if k > n {
        return Err(Error::out_of_domain(
            "k",
            format!("order {k} exceeds the number of columns {n}"),
        ));
    }

    let mut delta = 0.0f64;
    let mut support: Vec<usize> = (0..k).collect();
    loop {
        let gram = support_gram(a, &support);
        let eigs = symmetric_eigenvalues(&gram);
        let lmax = eigs.iter().cloned().fold(f64::MIN, f64::max);
        let lmin = eigs.iter().cloned().fold(f64::MAX, f64::min);
        delta = delta.max(lmax - 1.0).max(1.0 - lmin);
        if !next_combination(&mut support, n) {
            break;
        }
    }

    Ok(RicEstimate {
        order: k,
        value: delta,
        method: RicMethod::ExactEnumeration,
        samples: 0,
        is_exact: true,
        is_lower_bound: false,
    })
}

fn support_gram(a: &DenseMatrix, support: &[usize]) -> DenseMatrix {
    let k = support.len();
    let m = a.rows();
    DenseMatrix::from_fn(k, k, |p, q| {
        let (cp, cq) = (support[p], support[q]);
        (0..m).map(|r| a.get(r, cp) * a.get(r, cq)).sum()
    })
}

/// Advance `support` to the next k-combination of {0..n-1}; false when done.
fn next_combination(support: &mut [usize], n: usize) -> bool {
    let k = support.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if support[i] < n - (k - i) {
            support[i] += 1;
            for j in (i + 1)..k {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn symmetric_eigenvalues(g: &DenseMatrix) -> Vec<f64> {
    let n = g.rows();
    debug_assert_eq!(n, g.cols());
    let mut a = g.clone();
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= 1e-14 * a.max_abs().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                }
                for i in 0..n {
                    let api = a.get(p, i);
                    let aqi = a.get(q, i);
                    a.set(p, i, c * api - s * aqi);
                    a.set(q, i, s * api + c * aqi);
                }
            }
        }
    }
    (0..n).map(|i| a.get(i, i)).collect()
}

/// Monte-Carlo lower bound on the matrix RIC of order k: the largest
/// `|  ||A(X)||_2^2 - 1 |` over random unit-Frobenius matrices of every rank
/// r <= k (`samples` draws per rank). Reusing the lower-rank sample streams
/// makes estimates nondecreasing in k, and per-sample sub-seeds make the
/// estimate monotone under sample-count extension.
pub fn mc_matrix_ric(
    ens: &MeasurementEnsemble,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<RicEstimate> {
    if k == 0 || k > ens.n1().min(ens.n2()) {
        return Err(Error::out_of_domain(
            "k",
            format!(
                "order must be in 1..={}, got {k}",
                ens.n1().min(ens.n2())
            ),
        ));
    }
    if samples == 0 {
        return Err(Error::out_of_domain("samples", "need samples >= 1"));
    }
    let mut worst = 0.0f64;
    for rank in 1..=k {
        for idx in 0..samples {
            let x = random_unit_rank(ens.n1(), ens.n2(), rank, hash64(hash64(seed, rank as u64), idx as u64));
            let Some(x) = x else { continue };
            let ax = ens.apply(&x)?;
            let energy: f64 = ax.iter().map(|v| v * v).sum();
            worst = worst.max((energy - 1.0).abs());
        }
    }
    Ok(RicEstimate {
        order: k,
        value: worst,
        method: RicMethod::MonteCarlo,
        samples,
        is_exact: false,
        is_lower_bound: true,
    })
}

/// Random rank-`r` matrix with unit Frobenius norm: the product of two
/// standard Gaussian factors, normalized. Covers the rank manifold with
/// full measure.
fn random_unit_rank(n1: usize, n2: usize, r: usize, seed: u64) -> Option<DenseMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DenseMatrix::from_fn(n1, r, |_, _| StandardNormal.sample(&mut rng));
    let h = DenseMatrix::from_fn(n2, r, |_, _| StandardNormal.sample(&mut rng));
    let x = g.matmul(&h.transpose()).expect("factor shapes agree");
    let nrm = x.fro_norm();
    if nrm < 1e-300 {
        return None;
    }
    Some(x.scale(1.0 / nrm))
}

/// Sharpen a Monte-Carlo estimate by projected gradient ascent/descent of
/// `f(X) = ||A(X)||_2^2` over the unit-Frobenius rank-<=k set, run from
/// `init` toward both the maximum and the minimum. Non-improving steps are
/// rejected with a halved step; the result is never below the value at the
/// starting point.
pub fn ascent_refine_ric(
    ens: &MeasurementEnsemble,
    k: usize,
    init: &DenseMatrix,
    steps: usize,
) -> Result<RicEstimate> {
    if k == 0 || k > ens.n1().min(ens.n2()) {
        return Err(Error::out_of_domain(
            "k",
            format!("order must be in 1..={}, got {k}", ens.n1().min(ens.n2())),
        ));
    }
    if init.shape() != (ens.n1(), ens.n2()) {
        return Err(Error::DimensionMismatch {
            context: "ascent initial point",
            expected: format!("{}x{}", ens.n1(), ens.n2()),
            got: format!("{}x{}", init.rows(), init.cols()),
        });
    }
    let nrm = init.fro_norm();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::out_of_domain(
            "init",
            format!("must have unit Frobenius norm, got {nrm}"),
        ));
    }
    let init_rank = crate::linalg::svd(init)?
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12)
        .count();
    if init_rank > k {
        return Err(Error::out_of_domain(
            "init",
            format!("rank {init_rank} exceeds the order k = {k}"),
        ));
    }

    let op_norm_sq = ens.op_norm_sq(ASCENT_POWER_ITERS, ASCENT_POWER_SEED);
    let base_step = if op_norm_sq > 0.0 {
        ASCENT_STEP_FRACTION / op_norm_sq
    } else {
        ASCENT_STEP_FRACTION
    };

    let energy = |x: &DenseMatrix| -> Result<f64> {
        let ax = ens.apply(x)?;
        Ok(ax.iter().map(|v| v * v).sum())
    };

    let run = |toward_max: bool| -> Result<f64> {
        let mut x = init.clone();
        let mut fx = energy(&x)?;
        let mut step = base_step;
        for _ in 0..steps {
            let ax = ens.apply(&x)?;
            let grad = ens.adjoint(&ax)?.scale(2.0);
            let dir = if toward_max { step } else { -step };
            let cand = x.add_scaled(dir, &grad)?;
            let cand = truncate_rank(&cand, k)?;
            let cn = cand.fro_norm();
            if cn < 1e-300 {
                step *= 0.5;
                continue;
            }
            let cand = cand.scale(1.0 / cn);
            let fc = energy(&cand)?;
            let improved = if toward_max { fc > fx } else { fc < fx };
            if improved {
                x = cand;
                fx = fc;
            } else {
                step *= 0.5;
            }
        }
        Ok(fx)
    };

    let f_max = run(true)?;
    let f_min = run(false)?;
    let value = (f_max - 1.0).max(1.0 - f_min);

    Ok(RicEstimate {
        order: k,
        value,
        method: RicMethod::McPlusAscent,
        samples: 0,
        is_exact: false,
        is_lower_bound: true,
    })
}

/// Monte-Carlo estimate sharpened by ascent from the most extreme samples:
/// the estimate reported by the command-line `ric --mode ascent` path.
pub fn mc_plus_ascent_ric(
    ens: &MeasurementEnsemble,
    k: usize,
    samples: usize,
    seed: u64,
    steps: usize,
) -> Result<RicEstimate> {
    let mc = mc_matrix_ric(ens, k, samples, seed)?;
    // restart ascent from the sample attaining the MC extreme on each side
    let mut best_high: Option<(f64, DenseMatrix)> = None;
    let mut best_low: Option<(f64, DenseMatrix)> = None;
    for rank in 1..=k {
        for idx in 0..samples {
            let x = random_unit_rank(
                ens.n1(),
                ens.n2(),
                rank,
                hash64(hash64(seed, rank as u64), idx as u64),
            );
            let Some(x) = x else { continue };
            let ax = ens.apply(&x)?;
            let energy: f64 = ax.iter().map(|v| v * v).sum();
            if best_high.as_ref().is_none_or(|(e, _)| energy > *e) {
                best_high = Some((energy, x.clone()));
            }
            if best_low.as_ref().is_none_or(|(e, _)| energy < *e) {
                best_low = Some((energy, x));
            }
        }
    }
    let mut value = mc.value;
    for init in [best_high, best_low].into_iter().flatten() {
        let refined = ascent_refine_ric(ens, k, &init.1, steps)?;
        value = value.max(refined.value);
    }
    Ok(RicEstimate {
        order: k,
        value,
        method: RicMethod::McPlusAscent,
        samples,
        is_exact: false,
        is_lower_bound: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity_design_has_zero_ric() {
        let a = DenseMatrix::identity(6);
        for k in 1..=3 {
            let e = exact_sparse_ric(&a, k).unwrap();
            assert!(e.value <= 1e-12, "k={k}: {}", e.value);
            assert!(e.is_exact && !e.is_lower_bound);
        }
    }

    #[test]
    fn scaled_diagonal_design() {
        let a = DenseMatrix::diag(&[1.0, 0.8f64.sqrt()]);
        let e = exact_sparse_ric(&a, 1).unwrap();
        assert!((e.value - 0.2).abs() <= 1e-12, "got {}", e.value);
    }

    #[test]
    fn three_column_example() {
        // columns e1, e2, (e1+e2)/sqrt(2): worst pair has Gram eigenvalues
        // 1 +- 1/sqrt(2)
        let s = 0.5f64.sqrt();
        let a = DenseMatrix::new(2, 3, vec![1.0, 0.0, s, 0.0, 1.0, s]).unwrap();
        let e = exact_sparse_ric(&a, 2).unwrap();
        assert!((e.value - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-10, "got {}", e.value);
    }

    #[test]
    fn exact_agrees_with_submatrix_singular_values() {
        // independent brute force: extreme squared singular values of A_S
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..50 {
            let n = rng.gen_range(2..=8usize);
            let m = rng.gen_range(n..=10usize);
            let k = rng.gen_range(1..=3.min(n));
            let a = DenseMatrix::from_fn(m, n, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z / (m as f64).sqrt()
            });
            let fast = exact_sparse_ric(&a, k).unwrap().value;

            let mut brute = 0.0f64;
            let mut support: Vec<usize> = (0..k).collect();
            loop {
                let sub = DenseMatrix::from_fn(m, k, |r, c| a.get(r, support[c]));
                let svs = crate::linalg::svd(&sub).unwrap().singular_values;
                let smax = svs.first().unwrap();
                let smin = svs.last().unwrap();
                brute = brute.max(smax * smax - 1.0).max(1.0 - smin * smin);
                if !next_combination(&mut support, n) {
                    break;
                }
            }
            assert!(
                (fast - brute).abs() <= 1e-10,
                "trial {trial}: gram route {fast} vs svd route {brute}"
            );
        }
    }

    #[test]
    fn exact_caps_enforced() {
        let a = DenseMatrix::identity(6);
        assert!(matches!(
            exact_sparse_ric(&a, 7),
            Err(Error::SizeCap { .. }) | Err(Error::OutOfDomain { .. })
        ));
        let wide = DenseMatrix::zeros(2, 21);
        assert!(matches!(
            exact_sparse_ric(&wide, 2),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn mc_on_isometry_is_zero() {
        let ens = MeasurementEnsemble::coordinate(4, 4);
        for k in 1..=3 {
            let e = mc_matrix_ric(&ens, k, 200, 7).unwrap();
            assert!(e.value <= 1e-10, "k={k}: {}", e.value);
            assert!(e.is_lower_bound && !e.is_exact);
        }
    }

    #[test]
    fn mc_on_scaled_isometry_sees_the_scale() {
        let ens = MeasurementEnsemble::coordinate(3, 3).scaled(1.2f64.sqrt());
        let e = mc_matrix_ric(&ens, 2, 100, 11).unwrap();
        assert!((e.value - 0.2).abs() <= 1e-9, "got {}", e.value);
    }

    #[test]
    fn mc_monotone_in_samples_and_order() {
        let ens = MeasurementEnsemble::gaussian(12, 4, 4, 3).unwrap();
        let small = mc_matrix_ric(&ens, 2, 50, 21).unwrap().value;
        let large = mc_matrix_ric(&ens, 2, 500, 21).unwrap().value;
        assert!(small <= large + 1e-12);
        let k1 = mc_matrix_ric(&ens, 1, 200, 21).unwrap().value;
        let k2 = mc_matrix_ric(&ens, 2, 200, 21).unwrap().value;
        let k3 = mc_matrix_ric(&ens, 3, 200, 21).unwrap().value;
        assert!(k1 <= k2 + 1e-12 && k2 <= k3 + 1e-12);
    }

    #[test]
    fn single_measurement_ric_approaches_one() {
        // a rank-one map annihilates most rank-1 matrices, so delta_1 -> 1
        let a = DenseMatrix::from_fn(3, 3, |i, j| ((i + 2 * j) as f64 * 0.7).sin());
        let a = a.scale(1.0 / a.fro_norm());
        let ens = MeasurementEnsemble::new(3, 3, vec![a]).unwrap();
        let e = mc_matrix_ric(&ens, 1, 5000, 5).unwrap();
        assert!(e.value >= 0.999, "got {}", e.value);
    }

    #[test]
    fn ascent_stays_at_zero_on_isometry() {
        let ens = MeasurementEnsemble::coordinate(3, 3);
        let init = random_unit_rank(3, 3, 1, 99).unwrap();
        let e = ascent_refine_ric(&ens, 1, &init, 100).unwrap();
        assert!(e.value <= 1e-10, "got {}", e.value);
    }

    #[test]
    fn ascent_finds_uniform_scale() {
        let ens = MeasurementEnsemble::coordinate(3, 3).scaled(1.2f64.sqrt());
        for seed in [1u64, 2, 3] {
            let init = random_unit_rank(3, 3, 1, seed).unwrap();
            let e = ascent_refine_ric(&ens, 1, &init, 50).unwrap();
            assert!((e.value - 0.2).abs() <= 1e-9, "seed {seed}: {}", e.value);
        }
    }

    #[test]
    fn ascent_never_below_init_value() {
        let ens = MeasurementEnsemble::gaussian(10, 4, 4, 13).unwrap();
        for seed in 0..20u64 {
            let init = random_unit_rank(4, 4, 1, 1000 + seed).unwrap();
            let ax = ens.apply(&init).unwrap();
            let at_init: f64 = ax.iter().map(|v| v * v).sum::<f64>();
            let init_value = (at_init - 1.0).abs();
            let e = ascent_refine_ric(&ens, 1, &init, 60).unwrap();
            assert!(e.value + 1e-12 >= init_value);
        }
    }

    #[test]
    fn ascent_dominates_plain_sampling() {
        // refinement from the best of a few samples beats the same samples alone
        let mut wins = 0;
        for seed in 0..20u64 {
            let ens = MeasurementEnsemble::gaussian(10, 4, 4, 400 + seed).unwrap();
            let plain = mc_matrix_ric(&ens, 1, 50, seed).unwrap().value;
            let refined = mc_plus_ascent_ric(&ens, 1, 50, seed, 50).unwrap().value;
            assert!(refined + 1e-12 >= plain);
            if refined > plain + 1e-9 {
                wins += 1;
            }
        }
        assert!(wins >= 15, "ascent only improved {wins}/20 ensembles");
    }

    #[test]
    fn ascent_validates_init() {
        let ens = MeasurementEnsemble::coordinate(3, 3);
        let bad_norm = DenseMatrix::identity(3);
        assert!(ascent_refine_ric(&ens, 1, &bad_norm, 10).is_err());
        let full_rank = DenseMatrix::identity(3).scale(1.0 / 3f64.sqrt());
        assert!(ascent_refine_ric(&ens, 1, &full_rank, 10).is_err());
        assert!(ascent_refine_ric(&ens, 2, &full_rank, 10).is_err());
        assert!(ascent_refine_ric(&ens, 3, &full_rank, 10).is_ok());
    }
}
