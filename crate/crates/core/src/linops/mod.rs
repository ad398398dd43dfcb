//! Dense kernels and the abstract operator interface.
//!
//! [`Matrix`] is a plain row-major container. QR is a Householder
//! factorization written here; the SVD delegates to `nalgebra`'s
//! bidiagonalization. [`lsqr_min_norm`] only needs a [`LinearMap`], so the
//! sensing operator and the Gauss-Newton least-squares operator never have
//! to be materialized.

mod lsqr;
mod matrix;
mod qr;
mod svd;

pub use lsqr::{lsqr_min_norm, LsqrSolution, DEFAULT_LSQR_TOL};
pub use matrix::{axpy, dot, norm, Matrix};
pub use qr::{qr_thin, Qr};
pub use svd::{singular_values, svd_truncated, Svd};

/// A linear map between flat real vector spaces.
///
/// `apply` and `apply_adjoint` overwrite `out`. Implementations must satisfy
/// `<L x, y> = <x, L^T y>`.
pub trait LinearMap {
    fn domain_dim(&self) -> usize;
    fn codomain_dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]);
}

/// A dense matrix viewed as a [`LinearMap`].
#[derive(Debug, Clone)]
pub struct DenseMap(pub Matrix);

impl LinearMap for DenseMap {
    fn domain_dim(&self) -> usize {
        self.0.cols()
    }

    fn codomain_dim(&self) -> usize {
        self.0.rows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.0.row(i), x);
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, self.0.row(i), out);
        }
    }
}

/// Materializes any operator column by column. Meant for tests and tiny
/// instances.
pub fn materialize(op: &dyn LinearMap) -> Matrix {
    let (m, n) = (op.codomain_dim(), op.domain_dim());
    let mut out = Matrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        out.set_col(j, &col);
        e[j] = 0.0;
    }
    out
}

/// Relative adjoint mismatch `|<Lx,y> - <x,L^T y>| / (|Lx| |y| + |x| |L^T y|)`.
pub fn adjoint_mismatch(op: &dyn LinearMap, x: &[f64], y: &[f64]) -> f64 {
    let mut lx = vec![0.0; op.codomain_dim()];
    let mut lty = vec![0.0; op.domain_dim()];
    op.apply(x, &mut lx);
    op.apply_adjoint(y, &mut lty);
    let lhs = dot(&lx, y);
    let rhs = dot(x, &lty);
    let scale = norm(&lx) * norm(y) + norm(x) * norm(&lty);
    if scale == 0.0 {
        return 0.0;
    }
    (lhs - rhs).abs() / scale
}
