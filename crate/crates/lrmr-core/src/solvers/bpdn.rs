//! Accelerated proximal gradient solver for the vector program
//! `min ||x||_1 + (1/(2 lambda)) ||b - A x||_2^2` (basis pursuit denoising),
//! the l1 analogue of the regularized nuclear-norm program. Same scheme:
//! constant step, componentwise soft thresholding, momentum with
//! restart-on-increase so the recorded objective is nonincreasing.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm1, norm2, norm_inf, soft_threshold};
use crate::solvers::problem::{
    SolverOptions, VectorCertificate, VectorSolverResult, CERT_IMPROVE_REL, LIPSCHITZ_SAFETY,
    MONOTONE_SLACK, STALL_REL_TOL, STALL_WINDOW,
};
use crate::DenseMatrix;

pub fn solve_bpdn(
    a: &DenseMatrix,
    b: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<VectorSolverResult> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "basis pursuit observations",
            expected: format!("{}", a.rows()),
            got: format!("{}", b.len()),
        });
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::out_of_domain(
            "lambda",
            format!("need lambda > 0, got {lambda}"),
        ));
    }
    if opts.max_iters == 0 {
        return Err(Error::out_of_domain("max_iters", "need max_iters >= 1"));
    }

    let n = a.cols();
    let op_norm_sq = design_norm_sq(a) * LIPSCHITZ_SAFETY;
    if op_norm_sq <= 0.0 {
        let x = vec![0.0; n];
        let certificate = bpdn_certificate(a, b, &x, lambda, opts.tol)?;
        let final_objective = objective(a, b, &x, lambda)?;
        return Ok(VectorSolverResult {
            solution: x,
            iterations: 0,
            final_objective,
            objective_trace: vec![final_objective],
            converged: certificate.passes(),
            certificate,
        });
    }
    let tau = lambda / op_norm_sq;

    let prox_step = |point: &[f64]| -> Result<(Vec<f64>, f64)> {
        let ax = a.matvec(point)?;
        let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let grad = a.t_matvec(&residual)?;
        let stepped: Vec<f64> = point
            .iter()
            .zip(&grad)
            .map(|(xi, gi)| xi + tau / lambda * gi)
            .collect();
        let z = soft_threshold(&stepped, tau);
        let obj = objective(a, b, &z, lambda)?;
        Ok((z, obj))
    };

    let mut x = vec![0.0; n];
    let mut obj = objective(a, b, &x, lambda)?;
    let mut y = x.clone();
    let mut theta: f64 = 1.0;
    let mut trace = Vec::new();
    let mut stall = 0usize;
    let mut best_violation = f64::INFINITY;
    let mut iterations = 0usize;
    let mut certificate = bpdn_certificate(a, b, &x, lambda, opts.tol)?;

    for it in 1..=opts.max_iters {
        iterations = it;
        let slack = MONOTONE_SLACK * obj.abs().max(1.0);
        let (cand, cand_obj) = prox_step(&y)?;
        let (next, next_obj) = if cand_obj <= obj + slack {
            (cand, cand_obj)
        } else {
            theta = 1.0;
            let (plain, plain_obj) = prox_step(&x)?;
            if plain_obj <= obj + slack {
                (plain, plain_obj)
            } else {
                (x.clone(), obj)
            }
        };
        if !next_obj.is_finite() {
            return Err(Error::Diverged {
                context: "basis pursuit solve produced a non-finite iterate",
            });
        }

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_next;
        y = next
            .iter()
            .zip(&x)
            .map(|(nx, ox)| nx + momentum * (nx - ox))
            .collect();
        theta = theta_next;

        let obj_flat = (obj - next_obj).abs() <= STALL_REL_TOL * obj.abs().max(1.0);
        x = next;
        obj = next_obj;
        trace.push(obj);

        certificate = bpdn_certificate(a, b, &x, lambda, opts.tol)?;
        if certificate.passes() {
            break;
        }
        let violation = certificate.violation();
        let cert_improved = violation < best_violation * (1.0 - CERT_IMPROVE_REL);
        best_violation = best_violation.min(violation);
        if obj_flat && !cert_improved {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall >= STALL_WINDOW {
            break;
        }
    }

    let final_objective = objective(a, b, &x, lambda)?;
    Ok(VectorSolverResult {
        solution: x,
        iterations,
        final_objective,
        objective_trace: trace,
        converged: certificate.passes(),
        certificate,
    })
}

fn objective(a: &DenseMatrix, b: &[f64], x: &[f64], lambda: f64) -> Result<f64> {
    let ax = a.matvec(x)?;
    let r2: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai).powi(2)).sum();
    Ok(norm1(x) + r2 / (2.0 * lambda))
}

/// g = A^T (b - A x)/lambda; a minimizer satisfies ||g||_inf <= 1 and
/// <g, x> = ||x||_1.
fn bpdn_certificate(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    lambda: f64,
    tol: f64,
) -> Result<VectorCertificate> {
    let ax = a.matvec(x)?;
    let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let g: Vec<f64> = a
        .t_matvec(&residual)?
        .iter()
        .map(|v| v / lambda)
        .collect();
    let l1 = norm1(x);
    Ok(VectorCertificate {
        dual_infinity_norm: norm_inf(&g),
        alignment_gap: l1 - dot(&g, x),
        solution_l1_norm: l1,
        tolerance: tol,
    })
}

/// Power iteration estimate of ||A||_2^2 for a dense design matrix,
/// deterministic start vector.
fn design_norm_sq(a: &DenseMatrix) -> f64 {
    let n = a.cols();
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + (i as f64) / (n as f64 + 1.0))
        .collect();
    let nrm = norm2(&x);
    for xi in x.iter_mut() {
        *xi /= nrm;
    }
    let mut rayleigh = 0.0;
    for _ in 0..100 {
        let ax = a.matvec(&x).expect("dimensions fixed");
        let tx = a.t_matvec(&ax).expect("dimensions fixed");
        rayleigh = dot(&x, &tx);
        let tn = norm2(&tx);
        if tn == 0.0 {
            return 0.0;
        }
        for (xi, ti) in x.iter_mut().zip(&tx) {
            *xi = ti / tn;
        }
    }
    rayleigh
}
