use crate::error::{Error, Result};

use super::Matrix;

/// Rank-`k` truncated SVD: `m ≈ u · diag(s) · vᵀ` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    /// `u · diag(s) · vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.u.scale_cols(&self.s).matmul_t(&self.v)
    }
}

/// Best rank-`k` approximation factors of `m`.
pub fn svd_truncated(m: &Matrix, k: usize) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::BadDims(format!(
            "svd rank {k} outside 1..={} for a {rows}x{cols} matrix",
            rows.min(cols)
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    let svd = m.to_nalgebra().svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        unreachable!("singular vectors were requested");
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(k);
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = Matrix::from_fn(rows, k, |i, j| u[(i, order[j])]);
    let v = Matrix::from_fn(cols, k, |i, j| vt[(order[j], i)]);
    Ok(Svd { u, s, v })
}

/// All singular values of `m`, descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
