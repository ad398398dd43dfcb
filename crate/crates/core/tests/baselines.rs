use gnimc::baselines::{altmin_step, gradient};
use gnimc::gnimc::GnimcConfig;
use gnimc::problem::{generate, observe, sample_omega, Dims, FactorPair, Problem};
use gnimc::random::{gaussian_matrix, rng_from_seed};

fn small(seed: u64, m: usize) -> Problem {
    let dims = Dims {
        n1: 12,
        n2: 12,
        d1: 4,
        d2: 3,
        r: 2,
    };
    let t = generate(dims, 3.0, seed).unwrap();
    let omega = sample_omega(12, 12, m, seed + 1).unwrap();
    observe(&t, omega, 1e-2, seed + 2).unwrap()
}

/// Objective evaluated from the dense `A U Vᵀ Bᵀ`, independent of the
/// factored sampling used by the library.
fn dense_objective(p: &Problem, it: &FactorPair, lambda: f64) -> f64 {
    let x = p.side().a.matmul(&it.u).matmul_t(&p.side().b.matmul(&it.v));
    let data: f64 = p
        .samples()
        .iter()
        .zip(p.y())
        .map(|((i, j), y)| (x[(i, j)] - y).powi(2))
        .sum();
    let d = it.u.t_matmul(&it.u).sub(&it.v.t_matmul(&it.v));
    data + 0.25 * lambda * d.frobenius_norm().powi(2)
}

fn central_differences(p: &Problem, it: &FactorPair, lambda: f64) -> Vec<f64> {
    let h = 1e-6;
    let mut out = Vec::new();
    for in_u in [true, false] {
        let len = if in_u { it.u.as_slice().len() } else { it.v.as_slice().len() };
        for k in 0..len {
            let shifted = |delta: f64| {
                let mut s = it.clone();
                let m = if in_u { &mut s.u } else { &mut s.v };
                m.as_mut_slice()[k] += delta;
                dense_objective(p, &s, lambda)
            };
            out.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
    }
    out
}

fn random_pair(seed: u64) -> FactorPair {
    let mut rng = rng_from_seed(seed);
    FactorPair {
        u: gaussian_matrix(4, 2, &mut rng),
        v: gaussian_matrix(3, 2, &mut rng),
    }
}

#[test]
fn gradients_match_central_differences() {
    for seed in 0..20 {
        let p = small(seed * 11, 60);
        let it = random_pair(seed + 500);
        for lambda in [0.0, 0.7] {
            let g = gradient(&p, &it, lambda);
            let got: Vec<f64> = g.u.as_slice().iter().chain(g.v.as_slice()).copied().collect();
            let want = central_differences(&p, &it, lambda);
            let err: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!(err <= 1e-5 * scale, "seed {seed}, lambda {lambda}: {err} vs {scale}");
        }
    }
}

#[test]
fn regularizer_gradient_alone_matches_differences() {
    for seed in 0..20 {
        let p = small(seed * 13 + 1, 60);
        let it = random_pair(seed + 900);
        let lambda = 1.3;
        let full = gradient(&p, &it, lambda);
        let data = gradient(&p, &it, 0.0);
        let reg: Vec<f64> = full
            .u
            .sub(&data.u)
            .as_slice()
            .iter()
            .chain(full.v.sub(&data.v).as_slice())
            .copied()
            .collect();
        let with = central_differences(&p, &it, lambda);
        let without = central_differences(&p, &it, 0.0);
        let want: Vec<f64> = with.iter().zip(&without).map(|(a, b)| a - b).collect();
        let err: f64 = reg.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(err <= 1e-5 * scale.max(1e-3), "seed {seed}: {err} vs {scale}");
    }
}

#[test]
fn altmin_objective_never_increases_across_half_steps() {
    let cfg = GnimcConfig::default();
    for seed in 0..10 {
        let p = small(seed * 17 + 2, 50);
        let floor = 1e-28 * p.y().iter().map(|y| y * y).sum::<f64>();
        let mut it = random_pair(seed + 1300);
        let mut prev = dense_objective(&p, &it, 0.0);
        for step in 0..15 {
            let (mid, next, _) = altmin_step(&p, &it, 1000, &cfg).unwrap();
            for (half, state) in [("V", &mid), ("U", &next)] {
                let f = dense_objective(&p, state, 0.0);
                assert!(
                    f <= prev * (1.0 + 1e-12) + floor,
                    "seed {seed}, step {step}, {half} half: {f} > {prev}"
                );
                prev = f;
            }
            it = next;
        }
    }
}

#[test]
fn gradient_vanishes_at_a_noiseless_truth() {
    let dims = Dims {
        n1: 12,
        n2: 12,
        d1: 4,
        d2: 3,
        r: 2,
    };
    let t = generate(dims, 2.0, 3).unwrap();
    let p = observe(&t, sample_omega(12, 12, 40, 4).unwrap(), 0.0, 5).unwrap();
    let g = gradient(&p, &t.balanced_factors(), 1.0);
    assert!(g.u.max_abs().max(g.v.max_abs()) < 1e-12);
}
