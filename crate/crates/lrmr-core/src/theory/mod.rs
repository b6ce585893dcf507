//! Closed-form recovery theory: the RIP threshold sqrt((t-1)/t), the
//! constants beta1/beta2 and C1..C4 of the recovery bounds, a constructive
//! sparse decomposition over the polytope T(alpha, k), and post-hoc checkers
//! that evaluate the bound inequalities on solved instances.

mod checks;
mod lemma1;

pub use checks::{
    check_lemma3, verify_theorem1, GateStatus, Lemma3Report, Theorem1Report,
};
pub use lemma1::{lemma1_decompose, PolytopeDecomposition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs to the recovery bounds: RIP order parameters (t, k), the restricted
/// isometry constant delta at order ceil(t*k), and the problem's (lambda, eps).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TheoryParams {
    pub t: f64,
    pub k: usize,
    pub delta: f64,
    pub lambda: f64,
    pub epsilon: f64,
}

impl TheoryParams {
    pub fn new(t: f64, k: usize, delta: f64, lambda: f64, epsilon: f64) -> Result<Self> {
        if !t.is_finite() || t <= 1.0 {
            return Err(Error::out_of_domain("t", format!("need t > 1, got {t}")));
        }
        if k == 0 {
            return Err(Error::out_of_domain("k", "need k >= 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::out_of_domain(
                "delta",
                format!("need 0 < delta < 1, got {delta}"),
            ));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::out_of_domain(
                "lambda",
                format!("need lambda > 0, got {lambda}"),
            ));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::out_of_domain(
                "epsilon",
                format!("need epsilon >= 0, got {epsilon}"),
            ));
        }
        Ok(Self {
            t,
            k,
            delta,
            lambda,
            epsilon,
        })
    }
}

/// The recovery constants evaluated at a parameter point. `c3`/`c4` are only
/// defined on the good side of the RIP condition (beta2 < 1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TheoryBounds {
    pub beta1: f64,
    pub beta2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    /// delta < sqrt((t-1)/t)
    pub condition_ok: bool,
    /// beta2 < 1; equivalent to `condition_ok`, computed independently
    pub beta2_lt_one: bool,
}

/// The sharp RIP threshold `sqrt((t-1)/t)`; strictly increasing in t with
/// values in (0, 1).
pub fn rip_threshold(t: f64) -> Result<f64> {
    if !t.is_finite() || t <= 1.0 {
        return Err(Error::out_of_domain("t", format!("need t > 1, got {t}")));
    }
    Ok(((t - 1.0) / t).sqrt())
}

/// beta1 = 2 / ((1 - delta) sqrt(1 + delta)),
/// beta2 = delta / sqrt((1 - delta^2)(t - 1)).
///
/// beta2 < 1 exactly when delta < rip_threshold(t).
pub fn betas(delta: f64, t: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::out_of_domain(
            "delta",
            format!("need 0 < delta < 1, got {delta}"),
        ));
    }
    if !t.is_finite() || t <= 1.0 {
        return Err(Error::out_of_domain("t", format!("need t > 1, got {t}")));
    }
    let beta1 = 2.0 / ((1.0 - delta) * (1.0 + delta).sqrt());
    let beta2 = delta / ((1.0 - delta * delta) * (t - 1.0)).sqrt();
    Ok((beta1, beta2))
}

/// Evaluate the recovery-bound constants exactly as printed:
///
/// C1 = 2 lambda / (sqrt(k) beta1 lambda + eps)
/// C2 = 2 sqrt(k) beta1 lambda + 2 eps
/// C3 = [2 sqrt(k) beta1 (2 sqrt(k)+1+beta2) lambda
///        + 2 (sqrt(k) beta2 + 2 beta2 + sqrt(k)) eps] / [k beta1 (1-beta2) lambda]
/// C4 = [2 (k+sqrt(k)) beta1 lambda + (beta2 + 2 sqrt(k) - sqrt(k) beta2) eps]
///        * (sqrt(k) beta1 lambda + eps) / [sqrt(k) (1-beta2) lambda]
///
/// The inverse factor inside C4's denominator is deliberate; the source
/// formula is reproduced literally, so C4 carries a multiplicative
/// (sqrt(k) beta1 lambda + eps) term.
pub fn theorem1_constants(p: &TheoryParams) -> Result<TheoryBounds> {
    let (beta1, beta2) = betas(p.delta, p.t)?;
    let threshold = rip_threshold(p.t)?;
    let condition_ok = p.delta < threshold;
    let beta2_lt_one = beta2 < 1.0;

    let sk = (p.k as f64).sqrt();
    let kf = p.k as f64;
    let lam = p.lambda;
    let eps = p.epsilon;

    let c1 = 2.0 * lam / (sk * beta1 * lam + eps);
    let c2 = 2.0 * sk * beta1 * lam + 2.0 * eps;

    let (c3, c4) = if beta2_lt_one {
        // 1 - beta2 cancels catastrophically near the RIP boundary; use the
        // conjugate form (a - b = (a^2 - b^2)/(a + b)) with
        // a = sqrt((1-d^2)(t-1)), b = d, so a^2 - b^2 = (t-1) - d^2 t.
        let s = ((1.0 - p.delta * p.delta) * (p.t - 1.0)).sqrt();
        let one_minus_beta2 = ((p.t - 1.0) - p.delta * p.delta * p.t) / (s * (s + p.delta));
        let c3 = (2.0 * sk * beta1 * (2.0 * sk + 1.0 + beta2) * lam
            + 2.0 * (sk * beta2 + 2.0 * beta2 + sk) * eps)
            / (kf * beta1 * one_minus_beta2 * lam);
        let c4 = (2.0 * (kf + sk) * beta1 * lam + (beta2 + 2.0 * sk - sk * beta2) * eps)
            * (sk * beta1 * lam + eps)
            / (sk * one_minus_beta2 * lam);
        (Some(c3), Some(c4))
    } else {
        (None, None)
    };

    Ok(TheoryBounds {
        beta1,
        beta2,
        c1,
        c2,
        c3,
        c4,
        condition_ok,
        beta2_lt_one,
    })
}

/// Inequality comparison with the toolkit's standard slack: absolute 1e-8
/// plus relative 1e-8 on the larger side, absorbing solver inexactness.
pub(crate) const INEQ_ABS_TOL: f64 = 1e-8;
pub(crate) const INEQ_REL_TOL: f64 = 1e-8;

pub(crate) fn leq_with_tolerance(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + INEQ_ABS_TOL + INEQ_REL_TOL * lhs.abs().max(rhs.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_frozen_values() {
        assert!((rip_threshold(4.0 / 3.0).unwrap() - 0.5).abs() <= 1e-15);
        assert!((rip_threshold(2.0).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-15);
        assert!((rip_threshold(100.0).unwrap() - 0.99498743710662).abs() <= 1e-14);
        assert!(rip_threshold(1.0).is_err());
        assert!(rip_threshold(0.5).is_err());
    }

    #[test]
    fn threshold_strictly_increasing() {
        let mut prev = 0.0;
        for i in 0..200 {
            let t = 1.01 + 0.05 * i as f64;
            let v = rip_threshold(t).unwrap();
            assert!(v > prev && v < 1.0);
            prev = v;
        }
    }

    #[test]
    fn betas_frozen_values() {
        let (b1, b2) = betas(0.5, 2.0).unwrap();
        assert!((b1 - 3.265986323710904).abs() <= 1e-14);
        assert!((b2 - 0.5773502691896258).abs() <= 1e-15);
    }

    #[test]
    fn betas_limits_and_boundary() {
        let (b1, b2) = betas(1e-9, 1.01).unwrap();
        assert!((b1 - 2.0).abs() <= 1e-6);
        assert!(b2 <= 1e-6);
        // at delta = sqrt(1/2), t = 2 the condition is exactly on the boundary
        let (_, b2) = betas(0.5f64.sqrt(), 2.0).unwrap();
        assert!((b2 - 1.0).abs() <= 1e-14);
        assert!(betas(0.0, 2.0).is_err());
        assert!(betas(1.0, 2.0).is_err());
        assert!(betas(0.5, 1.0).is_err());
    }

    #[test]
    fn betas_monotone_in_delta() {
        for &t in &[1.2, 2.0, 3.5] {
            let mut prev = (0.0, 0.0);
            for i in 1..100 {
                let d = i as f64 / 100.0;
                let b = betas(d, t).unwrap();
                assert!(b.0 > prev.0 && b.1 > prev.1);
                prev = b;
            }
        }
    }

    #[test]
    fn constants_frozen_example() {
        let p = TheoryParams::new(2.0, 4, 0.5, 0.1, 0.05).unwrap();
        let b = theorem1_constants(&p).unwrap();
        assert!(b.condition_ok && b.beta2_lt_one);
        assert!((b.c1 - 0.2844152132379634).abs() <= 1e-15);
        assert!((b.c2 - 1.4063945294843616).abs() <= 1e-14);
        assert!((b.c3.unwrap() - 13.976632759433936).abs() <= 1e-12);
        assert!((b.c4.unwrap() - 34.02698341190892).abs() <= 1e-12);
    }

    #[test]
    fn constants_noiseless_limits() {
        let p = TheoryParams::new(2.0, 4, 0.5, 0.1, 0.0).unwrap();
        let b = theorem1_constants(&p).unwrap();
        let sk = 2.0;
        assert!((b.c1 - 2.0 / (sk * b.beta1)).abs() <= 1e-14);
        assert!((b.c2 - 2.0 * sk * b.beta1 * 0.1).abs() <= 1e-14);
        // C2 -> 0 as lambda -> 0 in the noiseless case
        let tiny = TheoryParams::new(2.0, 4, 0.5, 1e-9, 0.0).unwrap();
        let bt = theorem1_constants(&tiny).unwrap();
        assert!(bt.c2 <= 1e-7);
    }

    #[test]
    fn constants_undefined_above_threshold() {
        let p = TheoryParams::new(2.0, 4, 0.8, 0.1, 0.05).unwrap();
        let b = theorem1_constants(&p).unwrap();
        assert!(!b.condition_ok && !b.beta2_lt_one);
        assert!(b.c3.is_none() && b.c4.is_none());
        assert!(b.c1.is_finite() && b.c2.is_finite());
    }

    #[test]
    fn condition_equivalence_on_grid() {
        for i in 0..100 {
            for j in 0..100 {
                let delta = 0.01 + 0.98 * i as f64 / 99.0;
                let t = 1.01 + (5.0 - 1.01) * j as f64 / 99.0;
                let (_, b2) = betas(delta, t).unwrap();
                let cond = delta < rip_threshold(t).unwrap();
                assert_eq!(b2 < 1.0, cond, "delta={delta} t={t} beta2={b2}");
            }
        }
    }
}
