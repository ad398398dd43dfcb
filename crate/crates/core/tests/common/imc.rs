//! Dense reference for one Gauss-Newton step.

use gnimc::linops::Matrix;
use gnimc::problem::{FactorPair, Problem};

use super::oracle;

/// Dense matrix of `(ΔU, ΔV) ↦ P_Ω(A (U ΔVᵀ + ΔU Vᵀ) Bᵀ) / √p`, built entry
/// by entry from the features.
pub fn dense_linearization(p: &Problem, u: &Matrix, v: &Matrix) -> (Vec<f64>, usize, usize) {
    let (a, b) = (&p.side().a, &p.side().b);
    let (d1, d2, r) = (a.cols(), b.cols(), u.cols());
    let cols = (d1 + d2) * r;
    let rows = p.samples().len();
    let scale = 1.0 / p.p().sqrt();
    let au = a.matmul(u);
    let bv = b.matmul(v);
    let mut l = vec![0.0; rows * cols];
    for (k, (i, j)) in p.samples().iter().enumerate() {
        for kk in 0..d1 {
            for c in 0..r {
                l[k * cols + kk * r + c] = scale * a[(i, kk)] * bv[(j, c)];
            }
        }
        for kk in 0..d2 {
            for c in 0..r {
                l[k * cols + d1 * r + kk * r + c] = scale * au[(i, c)] * b[(j, kk)];
            }
        }
    }
    (l, rows, cols)
}

/// Minimal-norm least-squares update through the dense pseudoinverse.
pub fn oracle_step(p: &Problem, it: &FactorPair) -> FactorPair {
    let (l, rows, cols) = dense_linearization(p, &it.u, &it.v);
    let x = p.side().a.matmul(&it.product()).matmul_t(&p.side().b);
    let scale = 1.0 / p.p().sqrt();
    let rhs: Vec<f64> = p
        .samples()
        .iter()
        .zip(p.y())
        .map(|((i, j), y)| scale * (y - x[(i, j)]))
        .collect();
    let delta = oracle::matvec(&oracle::pinv(&l, rows, cols, 1e-10), cols, rows, &rhs);
    let (d1, r) = (it.u.rows(), it.u.cols());
    let cut = d1 * r;
    FactorPair {
        u: it.u.add(&Matrix::from_vec(d1, r, delta[..cut].to_vec())),
        v: it.v.add(&Matrix::from_vec(it.v.rows(), r, delta[cut..].to_vec())),
    }
}
