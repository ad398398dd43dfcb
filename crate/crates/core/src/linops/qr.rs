use crate::error::{Error, Result};

use super::{svd::singular_values, Matrix};

/// Relative singular-value floor below which a matrix counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Thin QR factors: `Q` is `rows x cols` with orthonormal columns, `R` is
/// `cols x cols` upper triangular with a nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct Qr {
    pub q: Matrix,
    pub r: Matrix,
}

/// Householder thin QR.
///
/// Fails with [`Error::RankDeficient`] when the smallest singular value of
/// `m` is at most `1e-12` times the largest.
pub fn qr_thin(m: &Matrix) -> Result<Qr> {
    let (rows, cols) = m.shape();
    if rows < cols || cols == 0 {
        return Err(Error::BadDims(format!(
            "qr_thin needs rows >= cols >= 1, got {rows}x{cols}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("qr_thin input"));
    }
    // Work on the transpose so each column is a contiguous slice.
    let mut a = m.transpose();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let x = &a.row(k)[k..];
        let xnorm = super::norm(x);
        let mut v = x.to_vec();
        if xnorm > 0.0 {
            let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
            v[0] -= alpha;
            let vnorm = super::norm(&v);
            v.iter_mut().for_each(|e| *e /= vnorm);
            for j in k..cols {
                let col = &mut a.row_mut(j)[k..];
                let s = 2.0 * super::dot(&v, col);
                super::axpy(-s, &v, col);
            }
        } else {
            v.fill(0.0);
        }
        reflectors.push(v);
    }

    let mut r = Matrix::from_fn(cols, cols, |i, j| if i <= j { a[(j, i)] } else { 0.0 });

    // Q = H_0 H_1 ... H_{n-1} applied to the leading identity columns,
    // again built column-contiguously through the transpose.
    let mut qt = Matrix::eye(cols, rows);
    for k in (0..cols).rev() {
        let v = &reflectors[k];
        for j in 0..cols {
            let col = &mut qt.row_mut(j)[k..];
            let s = 2.0 * super::dot(v, col);
            if s != 0.0 {
                super::axpy(-s, v, col);
            }
        }
    }
    for i in 0..cols {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).iter_mut().for_each(|e| *e = -*e);
            qt.row_mut(i).iter_mut().for_each(|e| *e = -*e);
        }
    }

    let sv = singular_values(&r);
    let largest = sv[0];
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * largest).count();
    if largest == 0.0 || rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    Ok(Qr { q: qt.transpose(), r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_matrix, rng_from_seed};

    fn orthonormality_error(q: &Matrix) -> f64 {
        q.t_matmul(q).sub(&Matrix::identity(q.cols())).frobenius_norm()
    }

    #[test]
    fn identity_factors_trivially() {
        let qr = qr_thin(&Matrix::identity(3)).unwrap();
        assert!(qr.q.sub(&Matrix::identity(3)).max_abs() < 1e-15);
        assert!(qr.r.sub(&Matrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn column_vector_normalizes() {
        let qr = qr_thin(&Matrix::column(&[3.0, 4.0])).unwrap();
        assert!((qr.q[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((qr.q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((qr.r[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn random_tall_reconstructs_entrywise() {
        let m = gaussian_matrix(6, 3, &mut rng_from_seed(42));
        let Qr { q, r } = qr_thin(&m).unwrap();
        assert!(orthonormality_error(&q) < 1e-12);
        // Entrywise sum over k of q[i,k] r[k,j], independent of matmul.
        for i in 0..6 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..=j {
                    s += q[(i, k)] * r[(k, j)];
                }
                assert!((s - m[(i, j)]).abs() < 1e-12);
            }
        }
        for i in 0..3 {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient_is_reported() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert!(matches!(
            qr_thin(&m),
            Err(Error::RankDeficient { rank: 1, cols: 2 })
        ));
        assert!(matches!(
            qr_thin(&Matrix::zeros(3, 2)),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn wide_input_is_rejected() {
        assert!(matches!(qr_thin(&Matrix::zeros(2, 3)), Err(Error::BadDims(_))));
    }
}
