//! Constructive sparse decomposition over the polytope
//! `T(alpha, k) = { v : ||v||_inf <= alpha, ||v||_1 <= k*alpha }`.
//!
//! Every member of `T(alpha, k)` is a convex combination of atoms from
//! `U(alpha, k, v) = { u : supp(u) ⊆ supp(v), ||u||_0 <= k,
//! ||u||_1 = ||v||_1, ||u||_inf <= alpha }`. The decomposition is built by
//! vertex peeling on the polytope `P = { 0 <= u <= alpha on supp(v),
//! sum(u) = ||v||_1 }`: every vertex of P has all coordinates at a bound
//! except at most one, hence at most k nonzeros when `||v||_1 <= k*alpha`,
//! so vertices of P are exactly the atoms we need. Each peel extracts one
//! vertex and strictly increases the number of bound-tight coordinates of
//! the residual, so at most ~2n atoms are produced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm1, norm_inf};

/// Caps keeping support enumeration and peeling at desk scale.
const MAX_LEN: usize = 10;
const MAX_K: usize = 4;

/// Membership slack: vectors within this relative distance of the polytope
/// boundary are accepted (randomly generated members often sit on it).
const MEMBERSHIP_TOL: f64 = 1e-12;

/// A convex decomposition `v = sum_i weights[i] * atoms[i]` with every atom
/// in `U(alpha, k, v)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeDecomposition {
    pub alpha: f64,
    pub k: usize,
    pub weights: Vec<f64>,
    pub atoms: Vec<Vec<f64>>,
}

impl PolytopeDecomposition {
    /// Recombine `sum_i weights[i] * atoms[i]`.
    pub fn recombine(&self) -> Vec<f64> {
        let n = self.atoms.first().map_or(0, |a| a.len());
        let mut out = vec![0.0; n];
        for (w, atom) in self.weights.iter().zip(&self.atoms) {
            for (o, a) in out.iter_mut().zip(atom) {
                *o += w * a;
            }
        }
        out
    }
}

/// Decompose a nonnegative member of `T(alpha, k)` into a convex combination
/// of k-sparse atoms with the same l1 mass.
pub fn lemma1_decompose(v: &[f64], alpha: f64, k: usize) -> Result<PolytopeDecomposition> {
    if v.len() > MAX_LEN || k > MAX_K {
        return Err(Error::SizeCap {
            message: format!(
                "decomposition supports length <= {MAX_LEN} and k <= {MAX_K}, got length {} and k {}",
                v.len(),
                k
            ),
        });
    }
    if k == 0 {
        return Err(Error::out_of_domain("k", "need k >= 1"));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::out_of_domain(
            "alpha",
            format!("need alpha > 0, got {alpha}"),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "decomposition input",
        });
    }
    if let Some(x) = v.iter().find(|&&x| x < 0.0) {
        return Err(Error::out_of_domain(
            "v",
            format!("entries must be nonnegative, found {x}"),
        ));
    }
    let linf = norm_inf(v);
    let l1 = norm1(v);
    if linf > alpha * (1.0 + MEMBERSHIP_TOL) {
        return Err(Error::NotInPolytope {
            reason: format!("||v||_inf = {linf} exceeds alpha = {alpha}"),
        });
    }
    if l1 > (k as f64) * alpha * (1.0 + MEMBERSHIP_TOL) {
        return Err(Error::NotInPolytope {
            reason: format!("||v||_1 = {l1} exceeds k*alpha = {}", k as f64 * alpha),
        });
    }

    let n = v.len();
    let mut weights = Vec::new();
    let mut atoms = Vec::new();

    // All-zero vectors decompose as the single zero atom.
    if l1 == 0.0 {
        return Ok(PolytopeDecomposition {
            alpha,
            k,
            weights: vec![1.0],
            atoms: vec![vec![0.0; n]],
        });
    }

    let mut x = v.to_vec();
    let mut mass_left = 1.0;
    // Each peel makes at least one more coordinate bound-tight; 4n iterations
    // is far beyond the worst case and only guards against fp stagnation.
    for _ in 0..(4 * n + 4) {
        clamp_tiny(&mut x, alpha);
        if count_nonzeros(&x) <= k {
            weights.push(mass_left);
            atoms.push(x);
            return Ok(PolytopeDecomposition {
                alpha,
                k,
                weights,
                atoms,
            });
        }

        let w = greedy_vertex(&x, alpha, l1);
        let gamma = max_peel_step(&x, &w, alpha).min(1.0);
        if gamma >= 1.0 - 1e-13 {
            // x coincides with the vertex
            weights.push(mass_left);
            atoms.push(w);
            return Ok(PolytopeDecomposition {
                alpha,
                k,
                weights,
                atoms,
            });
        }
        debug_assert!(gamma > 0.0, "peel step must make progress");
        let scale = 1.0 / (1.0 - gamma);
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi = (*xi - gamma * wi) * scale;
        }
        weights.push(mass_left * gamma);
        atoms.push(w);
        mass_left *= 1.0 - gamma;
    }
    Err(Error::invalid(
        "polytope decomposition",
        "peeling failed to terminate; input is numerically degenerate",
    ))
}

fn count_nonzeros(x: &[f64]) -> usize {
    x.iter().filter(|&&v| v != 0.0).count()
}

/// Snap coordinates that have drifted within fp noise of their bounds.
fn clamp_tiny(x: &mut [f64], alpha: f64) {
    for v in x.iter_mut() {
        if *v < alpha * 1e-14 {
            *v = 0.0;
        } else if *v > alpha * (1.0 - 1e-14) {
            *v = alpha;
        }
    }
}

/// The vertex of `P` aligned with `x`: fill the largest coordinates of `x`
/// to `alpha` until the remaining l1 mass fits in one final coordinate.
fn greedy_vertex(x: &[f64], alpha: f64, l1: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
    order.sort_by(|&i, &j| x[j].partial_cmp(&x[i]).unwrap().then(i.cmp(&j)));
    let mut w = vec![0.0; x.len()];
    let mut remaining = l1;
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(alpha);
        w[i] = take;
        remaining -= take;
    }
    w
}

/// Largest gamma in (0, 1] such that `(x - gamma*w) / (1 - gamma)` stays in
/// the box `[0, alpha]` on the support.
fn max_peel_step(x: &[f64], w: &[f64], alpha: f64) -> f64 {
    let mut gamma = 1.0f64;
    for (&xi, &wi) in x.iter().zip(w) {
        if wi > 0.0 {
            // keep residual nonnegative
            gamma = gamma.min(xi / wi);
            if wi < alpha {
                // keep residual below alpha where the vertex is fractional
                let headroom = alpha - xi;
                let denom = alpha - wi;
                if denom > 0.0 {
                    gamma = gamma.min(headroom / denom);
                }
            }
        } else if xi > 0.0 {
            // residual grows by 1/(1-gamma) where the vertex is zero
            gamma = gamma.min(1.0 - xi / alpha);
        }
    }
    gamma.max(0.0)
}
