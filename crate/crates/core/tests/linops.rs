mod common;

use common::oracle;
use gnimc::linops::{
    adjoint_mismatch, lsqr_min_norm, qr_thin, singular_values, svd_truncated, DenseMap, Matrix,
};
use gnimc::random::{gaussian_matrix, rng_from_seed};
use proptest::prelude::*;

#[test]
fn qr_on_200_seeded_full_rank_inputs() {
    for seed in 0..200u64 {
        let mut rng = rng_from_seed(seed);
        let rows = 2 + (seed as usize % 40);
        let cols = 1 + (seed as usize % rows.min(12));
        let m = gaussian_matrix(rows, cols, &mut rng);
        let qr = qr_thin(&m).unwrap();
        let orth = qr.q.t_matmul(&qr.q).sub(&Matrix::identity(cols)).frobenius_norm();
        assert!(orth <= 1e-10, "seed {seed}: {orth}");
        let recon = qr.q.matmul(&qr.r).sub(&m).frobenius_norm();
        assert!(recon <= 1e-10 * m.frobenius_norm(), "seed {seed}: {recon}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match_jacobi(rows in 1usize..=8, cols in 1usize..=8, seed in any::<u64>()) {
        let m = gaussian_matrix(rows, cols, &mut rng_from_seed(seed));
        let got = singular_values(&m);
        let want = oracle::singular_values(m.as_slice(), rows, cols);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9, "{} vs {}", g, w);
        }
        let k = rows.min(cols);
        let svd = svd_truncated(&m, k).unwrap();
        prop_assert!(svd.reconstruct().sub(&m).max_abs() <= 1e-9);
    }

    #[test]
    fn truncation_matches_jacobi_and_is_optimal(
        rows in 2usize..=8,
        cols in 2usize..=8,
        seed in any::<u64>(),
    ) {
        let mut rng = rng_from_seed(seed);
        let m = gaussian_matrix(rows, cols, &mut rng);
        let k = 1 + (seed as usize) % (rows.min(cols) - 1);
        let best = svd_truncated(&m, k).unwrap().reconstruct();
        let want = oracle::truncate(m.as_slice(), rows, cols, k);
        for (g, w) in best.as_slice().iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9);
        }
        // Eckart–Young: no nearby rank-k matrix does better.
        let svd = svd_truncated(&m, k).unwrap();
        let best_err = best.sub(&m).frobenius_norm();
        for _ in 0..100 {
            let u = svd.u.add(&gaussian_matrix(rows, k, &mut rng).scaled(0.05));
            let v = svd.v.add(&gaussian_matrix(cols, k, &mut rng).scaled(0.05));
            let other = u.scale_cols(&svd.s).matmul_t(&v);
            prop_assert!(other.sub(&m).frobenius_norm() >= best_err - 1e-12);
        }
    }

    #[test]
    fn lsqr_has_no_kernel_component(
        rows in 2usize..=10,
        extra in 1usize..=5,
        seed in any::<u64>(),
    ) {
        // Wide operator: an explicit kernel basis exists.
        let cols = rows + extra;
        let mut rng = rng_from_seed(seed);
        let a = gaussian_matrix(rows, cols, &mut rng);
        let b = gaussian_matrix(rows, 1, &mut rng).into_vec();
        let sol = lsqr_min_norm(&DenseMap(a.clone()), &b, 1000, 1e-14).unwrap();
        let svd = oracle::jacobi_svd(&a.transpose().into_vec(), cols, rows);
        // Kernel of A = complement of the range of Aᵀ: project x onto the
        // range and check nothing is left.
        let k = rows;
        let mut in_range = vec![0.0; cols];
        for l in 0..k {
            let c: f64 = (0..cols).map(|i| svd.u[i * k + l] * sol.x[i]).sum();
            for i in 0..cols {
                in_range[i] += c * svd.u[i * k + l];
            }
        }
        let leak: f64 = sol.x.iter().zip(&in_range).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(leak <= 1e-8 * (1.0 + oracle::frobenius(&sol.x)), "{}", leak);
        let pinv = oracle::pinv(a.as_slice(), rows, cols, 1e-12);
        let want = oracle::matvec(&pinv, cols, rows, &b);
        for (g, w) in sol.x.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-8 * (1.0 + w.abs()));
        }
    }

    #[test]
    fn dense_map_adjoint(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let op = DenseMap(gaussian_matrix(rows, cols, &mut rng));
        let x = gaussian_matrix(cols, 1, &mut rng).into_vec();
        let y = gaussian_matrix(rows, 1, &mut rng).into_vec();
        prop_assert!(adjoint_mismatch(&op, &x, &y) <= 1e-10);
    }
}

#[test]
fn lsqr_matches_pseudoinverse_on_rank_deficient_tall_system() {
    let mut rng = rng_from_seed(99);
    // 12x6 of rank 3.
    let a = gaussian_matrix(12, 3, &mut rng).matmul_t(&gaussian_matrix(6, 3, &mut rng));
    let b = gaussian_matrix(12, 1, &mut rng).into_vec();
    let sol = lsqr_min_norm(&DenseMap(a.clone()), &b, 1000, 1e-14).unwrap();
    let pinv = oracle::pinv(a.as_slice(), 12, 6, 1e-10);
    let want = oracle::matvec(&pinv, 6, 12, &b);
    for (g, w) in sol.x.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-8, "{g} vs {w}");
    }
}
