//! Seeded instance generators. All draws go through ChaCha streams keyed by
//! the caller's seed, so every artifact is reproducible from (config, seed).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::harness::config::NoiseKind;
use crate::linalg::{norm2, DenseMatrix, MeasurementEnsemble};

/// Gaussian measurement ensemble with i.i.d. N(0, 1/m) entries, the standard
/// isometry-normalized random map.
pub fn gen_gaussian_ensemble(
    m: usize,
    n1: usize,
    n2: usize,
    seed: u64,
) -> Result<MeasurementEnsemble> {
    MeasurementEnsemble::gaussian(m, n1, n2, seed)
}

/// Random rank-`r` matrix: product of two standard Gaussian factors,
/// normalized to unit Frobenius norm. Rank is exactly `r` with probability 1.
pub fn gen_low_rank(n1: usize, n2: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    if r == 0 || r > n1.min(n2) {
        return Err(Error::out_of_domain(
            "r",
            format!("rank must be in 1..={}, got {r}", n1.min(n2)),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DenseMatrix::from_fn(n1, r, |_, _| StandardNormal.sample(&mut rng));
    let h = DenseMatrix::from_fn(n2, r, |_, _| StandardNormal.sample(&mut rng));
    let x = g.matmul(&h.transpose())?;
    let nrm = x.fro_norm();
    if nrm < 1e-300 {
        return Err(Error::Diverged {
            context: "degenerate zero draw in low-rank generator",
        });
    }
    Ok(x.scale(1.0 / nrm))
}

/// Noise draw with `||n||_2 <= epsilon` always.
pub fn gen_noise(m: usize, epsilon: f64, kind: NoiseKind, seed: u64) -> Result<Vec<f64>> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::out_of_domain(
            "epsilon",
            format!("need epsilon >= 0, got {epsilon}"),
        ));
    }
    match kind {
        NoiseKind::None => Ok(vec![0.0; m]),
        NoiseKind::SphereUniformAtEps => Ok(sphere_point(m, seed).map_or(vec![0.0; m], |d| {
            d.into_iter().map(|x| x * epsilon).collect()
        })),
        NoiseKind::SphereUniformScaled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let radius: f64 = rng.gen::<f64>() * epsilon;
            // independent direction stream so the radius draw cannot shift it
            Ok(sphere_point(m, seed.wrapping_add(1)).map_or(vec![0.0; m], |d| {
                d.into_iter().map(|x| x * radius).collect()
            }))
        }
    }
}

/// Uniform point on the unit sphere (normalized Gaussian vector).
fn sphere_point(m: usize, seed: u64) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nrm = norm2(&v);
    if nrm < 1e-300 {
        return None;
    }
    Some(v.into_iter().map(|x| x / nrm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;

    #[test]
    fn gaussian_ensemble_deterministic_and_seed_sensitive() {
        let a = gen_gaussian_ensemble(4, 3, 3, 7).unwrap();
        let b = gen_gaussian_ensemble(4, 3, 3, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_gaussian_ensemble(4, 3, 3, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_entry_variance_near_one_over_m() {
        let m = 200;
        let ens = gen_gaussian_ensemble(m, 8, 8, 11).unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for mat in ens.matrices() {
            for &e in mat.entries() {
                sum += e;
                sum_sq += e * e;
                count += 1;
            }
        }
        assert!(count >= 10_000);
        let mean = sum / count as f64;
        let var = sum_sq / count as f64 - mean * mean;
        let expect = 1.0 / m as f64;
        assert!(
            (var - expect).abs() <= 0.1 * expect,
            "variance {var} vs expected {expect}"
        );
    }

    #[test]
    fn low_rank_has_exact_rank_and_unit_norm() {
        for (r, seed) in [(1usize, 3u64), (2, 4), (3, 5)] {
            let x = gen_low_rank(5, 6, r, seed).unwrap();
            assert!((x.fro_norm() - 1.0).abs() <= 1e-12);
            let s = svd(&x).unwrap().singular_values;
            assert!(s[r - 1] > 1e-10, "rank deficient draw");
            if r < 5 {
                assert!(s[r] <= 1e-10, "rank exceeds {r}");
            }
            assert_eq!(x, gen_low_rank(5, 6, r, seed).unwrap());
        }
        assert!(gen_low_rank(3, 3, 4, 1).is_err());
    }

    #[test]
    fn noise_kinds_respect_budget() {
        assert_eq!(gen_noise(5, 0.3, NoiseKind::None, 1).unwrap(), vec![0.0; 5]);
        let at = gen_noise(6, 0.25, NoiseKind::SphereUniformAtEps, 2).unwrap();
        assert!((norm2(&at) - 0.25).abs() <= 1e-12);
        for seed in 0..1000 {
            let n = gen_noise(4, 0.5, NoiseKind::SphereUniformScaled, seed).unwrap();
            assert!(norm2(&n) <= 0.5 + 1e-12);
        }
    }
}
