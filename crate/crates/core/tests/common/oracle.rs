//! Dense reference routines for tests. Self-contained: plain row-major
//! `Vec<f64>` in and out, no library kernels, so results can be checked
//! against the library without sharing code paths.

#![allow(dead_code)]

/// Thin SVD `A = U diag(s) Vᵀ`, `k = min(m, n)`, descending `s`.
pub struct DenseSvd {
    pub m: usize,
    pub n: usize,
    /// `m x k`, row-major.
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    /// `n x k`, row-major.
    pub v: Vec<f64>,
}

fn transpose(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            t[j * m + i] = a[i * n + j];
        }
    }
    t
}

/// One-sided (Hestenes) Jacobi: orthogonalizes the columns of `A` by plane
/// rotations until every pair is orthogonal to working precision.
pub fn jacobi_svd(a: &[f64], m: usize, n: usize) -> DenseSvd {
    assert_eq!(a.len(), m * n);
    if m < n {
        let t = jacobi_svd(&transpose(a, m, n), n, m);
        return DenseSvd {
            m,
            n,
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    // Column-major working copies.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i * n + j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols in [&mut w, &mut v] {
                    let (left, right) = cols.split_at_mut(q);
                    for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                        let (xp, yq) = (*x, *y);
                        *x = c * xp - s * yq;
                        *y = s * xp + c * yq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = vec![0.0; m * n];
    let mut vv = vec![0.0; n * n];
    let mut s = vec![0.0; n];
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        for i in 0..m {
            u[i * n + k] = if norms[j] > 0.0 { w[j][i] / norms[j] } else { 0.0 };
        }
        for i in 0..n {
            vv[i * n + k] = v[j][i];
        }
    }
    DenseSvd { m, n, u, s, v: vv }
}

pub fn singular_values(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    jacobi_svd(a, m, n).s
}

/// Moore–Penrose pseudoinverse (`n x m`), dropping singular values at or
/// below `rtol · σ₁`.
pub fn pinv(a: &[f64], m: usize, n: usize, rtol: f64) -> Vec<f64> {
    let svd = jacobi_svd(a, m, n);
    let k = m.min(n);
    let cut = rtol * svd.s.first().copied().unwrap_or(0.0);
    let mut out = vec![0.0; n * m];
    for l in 0..k {
        if svd.s[l] <= cut {
            continue;
        }
        let inv = 1.0 / svd.s[l];
        for i in 0..n {
            let vi = svd.v[i * k + l] * inv;
            for j in 0..m {
                out[i * m + j] += vi * svd.u[j * k + l];
            }
        }
    }
    out
}

pub fn matvec(a: &[f64], m: usize, n: usize, x: &[f64]) -> Vec<f64> {
    (0..m)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

pub fn matmul(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for l in 0..k {
            let x = a[i * k + l];
            for j in 0..n {
                out[i * n + j] += x * b[l * n + j];
            }
        }
    }
    out
}

/// Best rank-`k` approximation from the Jacobi SVD.
pub fn truncate(a: &[f64], m: usize, n: usize, k: usize) -> Vec<f64> {
    let svd = jacobi_svd(a, m, n);
    let kk = m.min(n);
    let mut out = vec![0.0; m * n];
    for l in 0..k.min(kk) {
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] += svd.u[i * kk + l] * svd.s[l] * svd.v[j * kk + l];
            }
        }
    }
    out
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod oracle_tests {
    #[allow(unused_imports)] // unused when the acceptance binary compiles without a test harness
    use super::*;

    #[test]
    fn diagonal_and_permuted() {
        // diag(1, 3, 2) with a row swap: singular values are the magnitudes.
        let a = [0.0, 3.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -2.0];
        let s = singular_values(&a, 3, 3);
        for (x, y) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn reconstructs_and_inverts() {
        // 4x3 matrix with a closed-form value: columns are orthogonal.
        let a = [1.0, 1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0];
        let svd = jacobi_svd(&a, 4, 3);
        let want = [2.0, 2f64.sqrt(), 2f64.sqrt()];
        for (x, y) in svd.s.iter().zip(want) {
            assert!((x - y).abs() < 1e-14);
        }
        let p = pinv(&a, 4, 3, 1e-12);
        // A⁺A = I for full column rank.
        let i3 = matmul(&p, 3, 4, &a, 3);
        for r in 0..3 {
            for c in 0..3 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((i3[r * 3 + c] - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn wide_rank_one() {
        // [1 2 3; 2 4 6] = (1,2)ᵀ(1,2,3): σ₁ = √5·√14.
        let a = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
        let s = singular_values(&a, 2, 3);
        assert!((s[0] - (70f64).sqrt()).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12);
        let p = pinv(&a, 2, 3, 1e-10);
        // A A⁺ A = A.
        let back = matmul(&matmul(&a, 2, 3, &p, 2), 2, 2, &a, 3);
        for (x, y) in back.iter().zip(a) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
