//! The Gauss-Newton IMC solver.
//!
//! Each outer iteration linearizes `U Vᵀ` around the current factors and
//! takes the minimal-norm least-squares update:
//!
//! 1. Thin QR `U = Q_U R_U`, `V = Q_V R_V`; LSQR from zero on the
//!    well-conditioned operator `ℒ_(Q_U,Q_V)`; map back through `R⁻ᵀ`.
//! 2. Project out the kernel `{(U R, −V Rᵀ)}` of `ℒ_(U,V)` so the update is
//!    the minimal-norm one in the original coordinates.
//!
//! ```
//! use gnimc::gnimc::{solve, GnimcConfig};
//! use gnimc::init::spectral_init;
//! use gnimc::problem::{generate, observe, sample_omega, Dims, RecoveryMeter};
//!
//! let dims = Dims { n1: 200, n2: 150, d1: 10, d2: 8, r: 3 };
//! let truth = generate(dims, 5.0, 1).unwrap();
//! let omega = sample_omega(200, 150, dims.samples_for_ratio(2.0), 2).unwrap();
//! let problem = observe(&truth, omega, 0.0, 3).unwrap();
//! let meter = RecoveryMeter::new(&truth, problem.side()).unwrap();
//! let init = spectral_init(&problem).unwrap();
//! let (_, report) = solve(&problem, &init, &GnimcConfig::default(), Some(&meter)).unwrap();
//! assert!(report.final_rel_rmse().unwrap() < 1e-10);
//! ```

mod report;
mod step;

pub use report::{GnimcConfig, IterRecord, SolveReport, Termination};
pub(crate) use report::Tracker;
pub use step::{balance, gnimc_step, gnimc_step_capped, project_out_kernel, GnStep, LeastSquaresOp};

use crate::error::Result;
use crate::linops::{materialize, qr_thin, singular_values};
use crate::problem::{FactorPair, Problem, RecoveryMeter};

/// Runs GNIMC from `init` until a stopping rule fires.
///
/// Step failures (a rank-deficient iterate, NaN) end the run with
/// [`Termination::InnerFailure`] and the last good iterate.
pub fn solve(
    problem: &Problem,
    init: &FactorPair,
    config: &GnimcConfig,
    meter: Option<&RecoveryMeter>,
) -> Result<(FactorPair, SolveReport)> {
    let op = problem.sensing();
    init.check_dims(op.d1(), op.d2(), problem.rank())?;
    let mut iterate = init.clone();
    let mut tracker = Tracker::new(
        problem,
        config,
        meter,
        &iterate,
        op.sample_factored(&iterate.u, &iterate.v),
    )?;
    while tracker.iter() < config.max_outer_iters {
        if tracker.out_of_time() {
            return Ok((iterate, tracker.finish(Termination::TimeLimit, None)));
        }
        let cap = tracker.inner_cap();
        let stepped = if config.balancing_enabled {
            balance(&iterate).and_then(|b| gnimc_step_capped(problem, &b, cap, config))
        } else {
            gnimc_step_capped(problem, &iterate, cap, config)
        };
        let step = match stepped {
            Ok(step) => step,
            Err(e) => {
                let report = tracker.finish(Termination::InnerFailure, Some(e.to_string()));
                return Ok((iterate, report));
            }
        };
        iterate = step.next;
        let entries = op.sample_factored(&iterate.u, &iterate.v);
        if let Some(t) = tracker.record(&iterate, entries, step.inner_iters) {
            return Ok((iterate, tracker.finish(t, None)));
        }
    }
    Ok((iterate, tracker.finish(Termination::MaxIters, None)))
}

/// Condition number of the preconditioned operator `ℒ_(Q_U,Q_V)` restricted
/// to the orthogonal complement of its kernel.
///
/// The operator is materialized and its full spectrum computed, so this is
/// meant for instances where `|Ω| x (d1+d2)r` fits comfortably in memory.
/// Returns `+∞` when `|Ω|` is below the degrees of freedom.
pub fn preconditioned_condition_number(problem: &Problem, iterate: &FactorPair) -> Result<f64> {
    let op = problem.sensing();
    let qu = qr_thin(&iterate.u)?.q;
    let qv = qr_thin(&iterate.v)?.q;
    let lsop = LeastSquaresOp::new(op, &qu, &qv)?;
    let r = iterate.rank();
    let dof = (op.d1() + op.d2() - r) * r;
    let s = singular_values(&materialize(&lsop));
    if s.len() < dof || s[dof - 1] == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(s[0] / s[dof - 1])
}

/// Smallest singular value of `U` and `V` relative to their largest.
pub fn relative_smallest_singular_value(iterate: &FactorPair) -> f64 {
    let rel = |m: &crate::linops::Matrix| {
        let s = singular_values(m);
        s[s.len() - 1] / s[0]
    };
    rel(&iterate.u).min(rel(&iterate.v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::spectral_init;
    use crate::linops::{adjoint_mismatch, LinearMap, Matrix};
    use crate::problem::{generate, observe, sample_omega, Dims, GroundTruth, SampleSet};
    use crate::random::{gaussian_matrix, rng_from_seed};

    fn tiny(seed: u64) -> (GroundTruth, Problem) {
        let dims = Dims {
            n1: 12,
            n2: 12,
            d1: 4,
            d2: 4,
            r: 2,
        };
        let t = generate(dims, 3.0, seed).unwrap();
        let p = observe(&t, SampleSet::full(12, 12), 0.0, seed + 1).unwrap();
        (t, p)
    }

    fn standard_small(seed: u64, rho: f64) -> (GroundTruth, Problem) {
        let dims = Dims {
            n1: 300,
            n2: 300,
            d1: 12,
            d2: 12,
            r: 4,
        };
        let t = generate(dims, 10.0, seed).unwrap();
        let omega = sample_omega(300, 300, dims.samples_for_ratio(rho), seed + 1).unwrap();
        let p = observe(&t, omega, 0.0, seed + 2).unwrap();
        (t, p)
    }

    #[test]
    fn least_squares_operator_adjoint() {
        let (_, p) = standard_small(1, 1.5);
        let mut rng = rng_from_seed(2);
        let u = gaussian_matrix(12, 4, &mut rng);
        let v = gaussian_matrix(12, 4, &mut rng);
        let lsop = LeastSquaresOp::new(p.sensing(), &u, &v).unwrap();
        for _ in 0..20 {
            let x = gaussian_matrix(96, 1, &mut rng).into_vec();
            let y = gaussian_matrix(p.samples().len(), 1, &mut rng).into_vec();
            assert!(adjoint_mismatch(&lsop, &x, &y) < 1e-10);
        }
    }

    #[test]
    fn fixed_point_at_truth() {
        let (t, p) = standard_small(3, 1.5);
        let truth = t.balanced_factors();
        let (next, _) = gnimc_step(&p, &truth, &GnimcConfig::default()).unwrap();
        assert!(next.u.sub(&truth.u).max_abs() < 1e-10);
        assert!(next.v.sub(&truth.v).max_abs() < 1e-10);
        let (_, report) = solve(&p, &truth, &GnimcConfig::default(), None).unwrap();
        assert_eq!(report.iterations(), 1);
        assert_eq!(report.termination, Termination::ObservedResidualSmall);
    }

    #[test]
    fn preconditioned_kernel_is_annihilated() {
        let (_, p) = tiny(5);
        let mut rng = rng_from_seed(6);
        let qu = qr_thin(&gaussian_matrix(4, 2, &mut rng)).unwrap().q;
        let qv = qr_thin(&gaussian_matrix(4, 2, &mut rng)).unwrap().q;
        let lsop = LeastSquaresOp::new(p.sensing(), &qu, &qv).unwrap();
        let r = gaussian_matrix(2, 2, &mut rng);
        let du = qu.matmul(&r);
        let dv = qv.matmul_t(&r).scaled(-1.0);
        let mut x = du.into_vec();
        x.extend_from_slice(dv.as_slice());
        let mut out = vec![0.0; lsop.codomain_dim()];
        lsop.apply(&x, &mut out);
        assert!(crate::linops::norm(&out) < 1e-12);
    }

    #[test]
    fn kernel_projection_is_orthogonal() {
        let mut rng = rng_from_seed(7);
        let u = gaussian_matrix(6, 3, &mut rng);
        let v = gaussian_matrix(5, 3, &mut rng);
        let du = gaussian_matrix(6, 3, &mut rng);
        let dv = gaussian_matrix(5, 3, &mut rng);
        let (pu, pv) = project_out_kernel(&u, &v, &du, &dv).unwrap();
        // <(pu,pv), (U R, −V Rᵀ)> = <UᵀΔU − ΔVᵀV, R> must vanish for all R.
        let c = u.t_matmul(&pu).sub(&pv.t_matmul(&v));
        assert!(c.max_abs() < 1e-10);
        // The removed part is a kernel element: (du-pu, dv-pv) = (U R, −V Rᵀ).
        let removed_u = du.sub(&pu);
        let gram = u.t_matmul(&u).to_nalgebra();
        let rhs = u.t_matmul(&removed_u).to_nalgebra();
        let rmat = Matrix::from_nalgebra(&gram.cholesky().unwrap().solve(&rhs));
        assert!(removed_u.sub(&u.matmul(&rmat)).max_abs() < 1e-10);
        let removed_v = dv.sub(&pv);
        assert!(removed_v.add(&v.matmul_t(&rmat)).max_abs() < 1e-10);
    }

    #[test]
    fn balance_preserves_product() {
        let mut rng = rng_from_seed(8);
        let u = gaussian_matrix(6, 3, &mut rng).scaled(10.0);
        let v = gaussian_matrix(5, 3, &mut rng).scaled(0.1);
        let pair = FactorPair { u, v };
        let b = balance(&pair).unwrap();
        assert!(b.product().sub(&pair.product()).max_abs() < 1e-10);
        assert!(b.imbalance() < 1e-10);
    }

    #[test]
    fn recovers_small_instance_quickly() {
        let (t, p) = standard_small(11, 2.0);
        let meter = RecoveryMeter::new(&t, p.side()).unwrap();
        let init = spectral_init(&p).unwrap();
        let (_, report) = solve(&p, &init, &GnimcConfig::default(), Some(&meter)).unwrap();
        assert!(report.final_rel_rmse().unwrap() < 1e-10, "{:?}", report.termination);
        assert!(!report.termination.is_failure());
        assert_eq!(report.empirical_gamma.len(), report.iterations());
    }

    #[test]
    fn target_and_iteration_limits_stop_the_loop() {
        let (t, p) = standard_small(12, 2.0);
        let meter = RecoveryMeter::new(&t, p.side()).unwrap();
        let init = spectral_init(&p).unwrap();
        let cfg = GnimcConfig {
            target_rel_rmse: Some(1e-3),
            ..GnimcConfig::default()
        };
        let (_, report) = solve(&p, &init, &cfg, Some(&meter)).unwrap();
        assert_eq!(report.termination, Termination::TargetReached);
        let cfg = GnimcConfig {
            max_outer_iters: 1,
            ..GnimcConfig::default()
        };
        let (_, report) = solve(&p, &init, &cfg, None).unwrap();
        assert_eq!(report.termination, Termination::MaxIters);
        assert_eq!(report.records.len(), 2);
        assert!(report.final_rel_rmse().is_none());
    }

    #[test]
    fn condition_number_is_finite_on_sampled_instance() {
        let (t, p) = standard_small(13, 2.0);
        let kappa = preconditioned_condition_number(&p, &t.balanced_factors()).unwrap();
        assert!(kappa.is_finite() && kappa >= 1.0);
    }
}
