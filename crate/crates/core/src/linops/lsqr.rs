use crate::error::{mismatch, Error, Result};

use super::{axpy, norm, LinearMap};

/// Default relative tolerance for inner least-squares solves.
pub const DEFAULT_LSQR_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LsqrSolution {
    pub x: Vec<f64>,
    pub iters: usize,
    /// Estimate of `‖op(x) − b‖`.
    pub residual_norm: f64,
}

/// Paige–Saunders LSQR started from `x = 0`, with `atol = btol = tol`.
///
/// Every iterate lies in the Krylov space of `opᵀ op` seeded by `opᵀ b`, so it
/// is orthogonal to `ker(op)` and the limit is the minimal-norm solution.
pub fn lsqr_min_norm(
    op: &dyn LinearMap,
    b: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<LsqrSolution> {
    let (m, n) = (op.codomain_dim(), op.domain_dim());
    if b.len() != m {
        return Err(mismatch(m, b.len()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("lsqr tolerance must be positive, got {tol}")));
    }

    let mut x = vec![0.0; n];
    let mut u = b.to_vec();
    let mut beta = norm(&u);
    let bnorm = beta;
    let done = |x: Vec<f64>, iters, residual_norm| LsqrSolution {
        x,
        iters,
        residual_norm,
    };
    if beta == 0.0 {
        return Ok(done(x, 0, 0.0));
    }
    u.iter_mut().for_each(|e| *e /= beta);
    let mut v = vec![0.0; n];
    op.apply_adjoint(&u, &mut v);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        return Ok(done(x, 0, bnorm));
    }
    v.iter_mut().for_each(|e| *e /= alpha);

    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm_sq = 0.0;
    let mut av = vec![0.0; m];
    let mut atu = vec![0.0; n];

    for iter in 1..=max_iters {
        op.apply(&v, &mut av);
        for (ui, ai) in u.iter_mut().zip(&av) {
            *ui = ai - alpha * *ui;
        }
        beta = norm(&u);
        anorm_sq += alpha * alpha + beta * beta;
        if beta > 0.0 {
            u.iter_mut().for_each(|e| *e /= beta);
            op.apply_adjoint(&u, &mut atu);
            for (vi, ai) in v.iter_mut().zip(&atu) {
                *vi = ai - beta * *vi;
            }
            alpha = norm(&v);
            if alpha > 0.0 {
                v.iter_mut().for_each(|e| *e /= alpha);
            }
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        axpy(phi / rho, &w, &mut x);
        let t2 = -theta / rho;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = vi + t2 * *wi;
        }

        if !phibar.is_finite() || !rho.is_finite() || x.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("lsqr iteration"));
        }

        let rnorm = phibar;
        let arnorm = alpha * (c * phibar).abs();
        let anorm = anorm_sq.sqrt();
        let xnorm = norm(&x);
        let consistent = rnorm <= tol * bnorm + tol * anorm * xnorm;
        let normal_eq = rnorm == 0.0 || arnorm <= tol * anorm * rnorm;
        if consistent || normal_eq || alpha == 0.0 || beta == 0.0 {
            return Ok(done(x, iter, rnorm));
        }
    }
    Ok(done(x, max_iters, phibar))
}
