//! Operator-splitting solver for the constrained program
//! `min ||X||_* subject to ||b - A(X)||_2 <= epsilon`.
//!
//! Linearized ADMM on the splitting r = b - A(X), ||r|| <= epsilon:
//! the X update is a singular value thresholding step on a linearized
//! augmented Lagrangian, the r update projects onto the epsilon-ball, and
//! the scaled dual accumulates the constraint violation. The reported
//! certificate uses the effective multiplier lambda_eff = ||A*(b - A(X))||_2,
//! under which the stationarity condition reads like the regularized one
//! with a dual matrix of unit spectral norm.

use crate::error::{Error, Result};
use crate::linalg::{norm2, nuclear_norm, residual_norm, spectral_norm, svt_with_nuclear};
use crate::solvers::problem::{
    OptimalityCertificate, RecoveryProblem, SolverOptions, SolverResult, FEASIBILITY_TOL,
    LIPSCHITZ_SAFETY, POWER_ITERS, POWER_SEED, STALL_REL_TOL, STALL_WINDOW,
};
use crate::DenseMatrix;

pub fn solve_nnm_constrained(p: &RecoveryProblem, opts: &SolverOptions) -> Result<SolverResult> {
    if opts.max_iters == 0 {
        return Err(Error::out_of_domain("max_iters", "need max_iters >= 1"));
    }
    let ens = p.ensemble();
    let eps = p.epsilon();
    let b = p.b();
    let m = ens.m();

    let op_norm_sq = ens.op_norm_sq(POWER_ITERS, POWER_SEED) * LIPSCHITZ_SAFETY;
    if op_norm_sq <= 0.0 {
        // the map is zero; feasibility requires ||b|| <= eps and the
        // minimum-nuclear-norm feasible point is zero
        let x = DenseMatrix::zeros(ens.n1(), ens.n2());
        let feasible = norm2(b) <= eps + FEASIBILITY_TOL;
        let certificate = effective_certificate(p, &x, opts.tol)?;
        return Ok(SolverResult {
            solution: x,
            iterations: 0,
            final_objective: 0.0,
            objective_trace: vec![0.0],
            converged: feasible,
            certificate,
        });
    }
    // penalty rho = 1; the linearization weight must dominate rho * ||A||^2
    let mu = op_norm_sq;

    let project_ball = |v: &[f64]| -> Vec<f64> {
        let n = norm2(v);
        if n <= eps || n == 0.0 {
            v.to_vec()
        } else {
            v.iter().map(|x| x * eps / n).collect()
        }
    };

    let mut x = DenseMatrix::zeros(ens.n1(), ens.n2());
    let mut ax = vec![0.0; m];
    let mut r = project_ball(b);
    let mut u = vec![0.0; m];
    let mut trace = Vec::new();
    let mut obj_prev = 0.0f64;
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let mut feasible = false;
    let mut certificate = effective_certificate(p, &x, opts.tol)?;

    for it in 1..=opts.max_iters {
        iterations = it;
        // linearized augmented-Lagrangian step on X, then nuclear prox
        let gap: Vec<f64> = (0..m).map(|i| b[i] - ax[i] - r[i] + u[i]).collect();
        let step = x.add_scaled(1.0 / mu, &ens.adjoint(&gap)?)?;
        let (xn, obj) = svt_with_nuclear(&step, 1.0 / mu)?;
        x = xn;
        ax = ens.apply(&x)?;
        if !obj.is_finite() || !x.is_finite() {
            return Err(Error::Diverged {
                context: "constrained nuclear-norm solve produced a non-finite iterate",
            });
        }

        // residual split and dual ascent
        let pre_r: Vec<f64> = (0..m).map(|i| b[i] - ax[i] + u[i]).collect();
        r = project_ball(&pre_r);
        let mut primal = 0.0f64;
        for i in 0..m {
            let viol = b[i] - ax[i] - r[i];
            u[i] += viol;
            primal += viol * viol;
        }
        let primal = primal.sqrt();

        trace.push(obj);
        feasible = residual_norm(b, &ax) <= eps + FEASIBILITY_TOL;

        if (obj_prev - obj).abs() <= STALL_REL_TOL * obj_prev.abs().max(1.0) {
            stall += 1;
        } else {
            stall = 0;
        }
        obj_prev = obj;

        let primal_ok = primal <= 1e-10 * norm2(b).max(1.0);
        if feasible && primal_ok {
            certificate = effective_certificate(p, &x, opts.tol)?;
            if certificate.passes() {
                break;
            }
        }
        if stall >= STALL_WINDOW {
            certificate = effective_certificate(p, &x, opts.tol)?;
            break;
        }
    }
    if iterations == opts.max_iters {
        certificate = effective_certificate(p, &x, opts.tol)?;
    }

    let final_objective = nuclear_norm(&x)?;
    Ok(SolverResult {
        solution: x,
        iterations,
        final_objective,
        objective_trace: trace,
        converged: feasible && certificate.passes(),
        certificate,
    })
}

/// Certificate at the effective Lagrange multiplier: with
/// lambda_eff = ||A*(b - A(X))||_2 the dual matrix G = A*(b - A(X))/lambda_eff
/// has unit spectral norm by construction, so the meaningful condition is
/// alignment with the solution's singular spaces. A vanishing multiplier is
/// only optimal at X = 0.
fn effective_certificate(
    p: &RecoveryProblem,
    x: &DenseMatrix,
    tol: f64,
) -> Result<OptimalityCertificate> {
    let ax = p.ensemble().apply(x)?;
    let residual: Vec<f64> = p.b().iter().zip(&ax).map(|(b, a)| b - a).collect();
    let g_raw = p.ensemble().adjoint(&residual)?;
    let lambda_eff = spectral_norm(&g_raw)?;
    let nuc = nuclear_norm(x)?;
    if lambda_eff <= 1e-14 {
        return Ok(OptimalityCertificate {
            dual_spectral_norm: 0.0,
            alignment_gap: nuc,
            solution_nuclear_norm: nuc,
            tolerance: tol,
        });
    }
    let g = g_raw.scale(1.0 / lambda_eff);
    Ok(OptimalityCertificate {
        dual_spectral_norm: 1.0,
        alignment_gap: nuc - g.fro_dot(x)?,
        solution_nuclear_norm: nuc,
        tolerance: tol,
    })
}
