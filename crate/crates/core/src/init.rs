//! Initialization: projected gradient steps onto the rank-`r` manifold and
//! the balanced factor split.

use crate::error::{Error, Result};
use crate::linops::{svd_truncated, Matrix};
use crate::problem::{FactorPair, Problem};

/// Default number of projected-gradient iterations.
pub const DEFAULT_INIT_ITERS: usize = 25;

/// Iterates `M ← P_r[M − Aᵀ(P_Ω(A M Bᵀ) − Y) B / p]` from `M = 0`.
///
/// Dividing the whole residual by `p` keeps `M*` a fixed point of the
/// noiseless iteration.
pub fn projected_gradient_init(problem: &Problem, num_iters: usize) -> Result<Matrix> {
    projected_gradient_path(problem, num_iters).map(|mut path| path.pop().expect("nonempty"))
}

/// Every iterate `M_1 … M_num_iters` of [`projected_gradient_init`].
pub fn projected_gradient_path(problem: &Problem, num_iters: usize) -> Result<Vec<Matrix>> {
    if num_iters == 0 {
        return Err(Error::Config("projected_gradient_init needs num_iters >= 1".into()));
    }
    let op = problem.sensing();
    let (d1, d2, r) = (op.d1(), op.d2(), problem.rank());
    let inv_p = 1.0 / problem.p();
    let mut m = Matrix::zeros(d1, d2);
    let mut path = Vec::with_capacity(num_iters);
    for _ in 0..num_iters {
        let mut resid = op.sample_dense(&m);
        for (e, y) in resid.iter_mut().zip(problem.y()) {
            *e -= y;
        }
        let grad = op.adjoint_unscaled(&resid);
        m.add_scaled_mut(-inv_p, &grad);
        m = svd_truncated(&m, r)?.reconstruct();
        if !m.is_finite() {
            return Err(Error::NonFinite("projected gradient init"));
        }
        path.push(m.clone());
    }
    Ok(path)
}

/// `(U Σ^½, V Σ^½)` from the rank-`r` truncated SVD of `m`.
pub fn balanced_split(m: &Matrix, r: usize) -> Result<FactorPair> {
    let svd = svd_truncated(m, r)?;
    let root: Vec<f64> = svd.s.iter().map(|s| s.sqrt()).collect();
    FactorPair::new(svd.u.scale_cols(&root), svd.v.scale_cols(&root))
}

/// One projected-gradient step from zero, split into balanced factors.
pub fn spectral_init(problem: &Problem) -> Result<FactorPair> {
    balanced_split(&projected_gradient_init(problem, 1)?, problem.rank())
}
