//! Accelerated proximal gradient solver for the regularized program
//! `min ||X||_* + (1/(2 lambda)) ||b - A(X)||_2^2`.
//!
//! Each iteration takes a gradient step on the smooth term with a constant
//! step tau = lambda / (SAFETY * ||A||^2) and applies singular value
//! thresholding at level tau. Nesterov momentum is restarted whenever the
//! candidate would increase the objective; the restarted plain proximal step
//! cannot increase it, so the recorded objective trace is nonincreasing.

use crate::error::{Error, Result};
use crate::linalg::{residual_norm, svt_with_nuclear};
use crate::solvers::problem::{
    check_optimality, RecoveryProblem, SolverOptions, SolverResult, CERT_IMPROVE_REL,
    LIPSCHITZ_SAFETY, MONOTONE_SLACK, POWER_ITERS, POWER_SEED, STALL_REL_TOL, STALL_WINDOW,
};
use crate::DenseMatrix;

pub fn solve_rnnm(p: &RecoveryProblem, opts: &SolverOptions) -> Result<SolverResult> {
    if opts.max_iters == 0 {
        return Err(Error::out_of_domain("max_iters", "need max_iters >= 1"));
    }
    let ens = p.ensemble();
    let lambda = p.lambda();
    let op_norm_sq = ens.op_norm_sq(POWER_ITERS, POWER_SEED) * LIPSCHITZ_SAFETY;
    // A map with no energy measures nothing; the objective reduces to
    // ||X||_* and the minimizer is zero.
    if op_norm_sq <= 0.0 {
        let x = DenseMatrix::zeros(ens.n1(), ens.n2());
        let certificate = check_optimality(p, &x, opts.tol)?;
        let final_objective = p.rnnm_objective(&x)?;
        return Ok(SolverResult {
            solution: x,
            iterations: 0,
            final_objective,
            objective_trace: vec![final_objective],
            converged: certificate.passes(),
            certificate,
        });
    }
    let tau = lambda / op_norm_sq;

    // prox-gradient step from `point`: svt(point - tau * grad f(point), tau)
    let prox_step = |point: &DenseMatrix| -> Result<(DenseMatrix, f64)> {
        let ax = ens.apply(point)?;
        let residual: Vec<f64> = p.b().iter().zip(&ax).map(|(b, a)| b - a).collect();
        // grad f = -A*(b - A x)/lambda, so the step adds tau/lambda * A*(residual)
        let grad_step = point.add_scaled(tau / lambda, &ens.adjoint(&residual)?)?;
        let (z, z_nuclear) = svt_with_nuclear(&grad_step, tau)?;
        let r = residual_norm(p.b(), &ens.apply(&z)?);
        Ok((z, z_nuclear + r * r / (2.0 * lambda)))
    };

    let mut x = DenseMatrix::zeros(ens.n1(), ens.n2());
    let mut obj = p.rnnm_objective(&x)?;
    let mut y = x.clone();
    let mut theta: f64 = 1.0;
    let mut trace = Vec::new();
    let mut stall = 0usize;
    let mut best_violation = f64::INFINITY;
    let mut iterations = 0usize;
    let mut certificate = check_optimality(p, &x, opts.tol)?;

    for it in 1..=opts.max_iters {
        iterations = it;
        let slack = MONOTONE_SLACK * obj.abs().max(1.0);
        let (cand, cand_obj) = prox_step(&y)?;
        let (next, next_obj) = if cand_obj <= obj + slack {
            (cand, cand_obj)
        } else {
            // momentum overshoot: restart from the current iterate
            theta = 1.0;
            let (plain, plain_obj) = prox_step(&x)?;
            if plain_obj <= obj + slack {
                (plain, plain_obj)
            } else {
                (x.clone(), obj)
            }
        };
        if !next_obj.is_finite() || !next.is_finite() {
            return Err(Error::Diverged {
                context: "regularized nuclear-norm solve produced a non-finite iterate",
            });
        }

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_next;
        y = next.add_scaled(momentum, &next.sub(&x)?)?;
        theta = theta_next;

        let obj_flat = (obj - next_obj).abs() <= STALL_REL_TOL * obj.abs().max(1.0);
        x = next;
        obj = next_obj;
        trace.push(obj);

        certificate = check_optimality(p, &x, opts.tol)?;
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

    let final_objective = p.rnnm_objective(&x)?;
    Ok(SolverResult {
        solution: x,
        iterations,
        final_objective,
        objective_trace: trace,
        converged: certificate.passes(),
        certificate,
    })
}
