//! Reference solvers: alternating minimization with QR, vanilla gradient
//! descent and imbalance-regularized gradient descent.
//!
//! All of them report through [`SolveReport`] and stop under the same rules
//! as GNIMC. The gradient methods minimize
//! `f(U, V) = ‖P_Ω(A U Vᵀ Bᵀ) − Y‖_F²`, with RGD adding
//! `(λ/4)‖UᵀU − VᵀV‖_F²`.

use crate::error::{Error, Result};
use crate::gnimc::{GnimcConfig, SolveReport, Termination, Tracker};
use crate::linops::{lsqr_min_norm, qr_thin, LinearMap, Matrix, Qr};
use crate::problem::{FactorPair, Problem, RecoveryMeter};
use crate::sensing::SensingOp;

/// Least-squares operator of one AltMin half-step, with one factor held
/// fixed as an orthonormal basis.
struct HalfStepOp<'a> {
    op: &'a SensingOp,
    /// Fixed factor lifted to the sampled rows (`A Q_U`) or columns (`B Q_V`).
    fixed: Matrix,
    solve_for_v: bool,
}

impl HalfStepOp<'_> {
    fn free_rows(&self) -> usize {
        if self.solve_for_v {
            self.op.d2()
        } else {
            self.op.d1()
        }
    }
}

impl LinearMap for HalfStepOp<'_> {
    fn domain_dim(&self) -> usize {
        self.free_rows() * self.fixed.cols()
    }

    fn codomain_dim(&self) -> usize {
        self.op.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let free = Matrix::from_vec(self.free_rows(), self.fixed.cols(), x.to_vec());
        out.fill(0.0);
        if self.solve_for_v {
            self.op
                .add_pair_dots(&self.fixed, &self.op.b_rows().matmul(&free), out);
        } else {
            self.op
                .add_pair_dots(&self.op.a_rows().matmul(&free), &self.fixed, out);
        }
    }

    fn apply_adjoint(&self, z: &[f64], out: &mut [f64]) {
        let g = if self.solve_for_v {
            self.op.b_rows().t_matmul(&self.op.scatter_cols(z, &self.fixed))
        } else {
            self.op.a_rows().t_matmul(&self.op.scatter_rows(z, &self.fixed))
        };
        out.copy_from_slice(g.as_slice());
    }
}

fn residual(problem: &Problem, entries: &[f64]) -> Vec<f64> {
    problem.y().iter().zip(entries).map(|(y, x)| y - x).collect()
}

/// One exact block minimization. Solving for a correction from zero keeps
/// the LSQR residual, and so the objective, nonincreasing.
fn half_step(
    problem: &Problem,
    iterate: &FactorPair,
    solve_for_v: bool,
    cap: usize,
    tol: f64,
) -> Result<(FactorPair, usize)> {
    let op = problem.sensing();
    let (basis_src, free_src) = if solve_for_v {
        (&iterate.u, &iterate.v)
    } else {
        (&iterate.v, &iterate.u)
    };
    let Qr { q, r } = qr_thin(basis_src)?;
    // U Vᵀ = Q_U (V R_Uᵀ)ᵀ, and symmetrically for the U half-step.
    let free0 = free_src.matmul_t(&r);
    let lifted = if solve_for_v {
        op.a_rows().matmul(&q)
    } else {
        op.b_rows().matmul(&q)
    };
    let hop = HalfStepOp {
        op,
        fixed: lifted,
        solve_for_v,
    };
    let b = residual(problem, &op.sample_factored(&iterate.u, &iterate.v));
    let sol = lsqr_min_norm(&hop, &b, cap, tol)?;
    let mut free = free0;
    free.as_mut_slice()
        .iter_mut()
        .zip(&sol.x)
        .for_each(|(f, d)| *f += d);
    if !free.is_finite() {
        return Err(Error::NonFinite("altmin half-step"));
    }
    let next = if solve_for_v {
        FactorPair { u: q, v: free }
    } else {
        FactorPair { u: free, v: q }
    };
    Ok((next, sol.iters))
}

/// One AltMin iteration: the state after the V half-step, after the U
/// half-step, and the inner iterations used.
pub fn altmin_step(
    problem: &Problem,
    iterate: &FactorPair,
    inner_cap: usize,
    config: &GnimcConfig,
) -> Result<(FactorPair, FactorPair, usize)> {
    let op = problem.sensing();
    iterate.check_dims(op.d1(), op.d2(), problem.rank())?;
    let (mid, i1) = half_step(problem, iterate, true, inner_cap, config.lsqr_tol)?;
    let (next, i2) = half_step(problem, &mid, false, inner_cap, config.lsqr_tol)?;
    Ok((mid, next, i1 + i2))
}

pub fn altmin_solve(
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
        let (_, next, inner) = match altmin_step(problem, &iterate, tracker.inner_cap(), config) {
            Ok(s) => s,
            Err(e) => {
                return Ok((
                    iterate,
                    tracker.finish(Termination::InnerFailure, Some(e.to_string())),
                ))
            }
        };
        iterate = next;
        let entries = op.sample_factored(&iterate.u, &iterate.v);
        if let Some(t) = tracker.record(&iterate, entries, inner) {
            return Ok((iterate, tracker.finish(t, None)));
        }
    }
    Ok((iterate, tracker.finish(Termination::MaxIters, None)))
}

/// Forward quantities at one iterate, reused by the next gradient step.
struct GradState {
    au: Matrix,
    bv: Matrix,
    entries: Vec<f64>,
}

impl GradState {
    fn new(op: &SensingOp, iterate: &FactorPair) -> Self {
        let au = op.a_rows().matmul(&iterate.u);
        let bv = op.b_rows().matmul(&iterate.v);
        let entries = op.pair_dots(&au, &bv);
        Self { au, bv, entries }
    }
}

/// `(∇_U f, ∇_V f)` of the regularized objective at the state's iterate.
fn gradient_at(
    problem: &Problem,
    iterate: &FactorPair,
    state: &GradState,
    lambda: f64,
) -> FactorPair {
    let op = problem.sensing();
    let e: Vec<f64> = state
        .entries
        .iter()
        .zip(problem.y())
        .map(|(x, y)| 2.0 * (x - y))
        .collect();
    let mut gu = op.a_rows().t_matmul(&op.scatter_rows(&e, &state.bv));
    let mut gv = op.b_rows().t_matmul(&op.scatter_cols(&e, &state.au));
    if lambda != 0.0 {
        let d = iterate
            .u
            .t_matmul(&iterate.u)
            .sub(&iterate.v.t_matmul(&iterate.v));
        gu.add_scaled_mut(lambda, &iterate.u.matmul(&d));
        gv.add_scaled_mut(-lambda, &iterate.v.matmul(&d));
    }
    FactorPair { u: gu, v: gv }
}

/// Gradient of `‖P_Ω(A U Vᵀ Bᵀ) − Y‖² + (λ/4)‖UᵀU − VᵀV‖²`.
pub fn gradient(problem: &Problem, iterate: &FactorPair, lambda: f64) -> FactorPair {
    let state = GradState::new(problem.sensing(), iterate);
    gradient_at(problem, iterate, &state, lambda)
}

/// `‖P_Ω(A U Vᵀ Bᵀ) − Y‖² + (λ/4)‖UᵀU − VᵀV‖²`.
pub fn objective(problem: &Problem, iterate: &FactorPair, lambda: f64) -> f64 {
    let x = problem
        .sensing()
        .sample_factored(&iterate.u, &iterate.v);
    let data: f64 = x
        .iter()
        .zip(problem.y())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    data + 0.25 * lambda * iterate.imbalance().powi(2)
}

fn check_step(step_size: f64, lambda: f64) -> Result<()> {
    if !(step_size > 0.0) || !step_size.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {step_size}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

fn descend(iterate: &FactorPair, grad: &FactorPair, step_size: f64) -> Result<FactorPair> {
    let mut next = iterate.clone();
    next.u.add_scaled_mut(-step_size, &grad.u);
    next.v.add_scaled_mut(-step_size, &grad.v);
    if !next.is_finite() {
        return Err(Error::NonFinite("gradient step"));
    }
    Ok(next)
}

/// `U ← U − η ∇_U f`, `V ← V − η ∇_V f`, both gradients at the input.
pub fn gd_step(problem: &Problem, iterate: &FactorPair, step_size: f64) -> Result<FactorPair> {
    rgd_step(problem, iterate, step_size, 0.0)
}

/// [`gd_step`] plus the imbalance term `λ U(UᵀU − VᵀV)`, `−λ V(UᵀU − VᵀV)`.
pub fn rgd_step(
    problem: &Problem,
    iterate: &FactorPair,
    step_size: f64,
    lambda: f64,
) -> Result<FactorPair> {
    check_step(step_size, lambda)?;
    let op = problem.sensing();
    iterate.check_dims(op.d1(), op.d2(), problem.rank())?;
    descend(iterate, &gradient(problem, iterate, lambda), step_size)
}

pub fn gd_solve(
    problem: &Problem,
    init: &FactorPair,
    config: &GnimcConfig,
    step_size: f64,
    meter: Option<&RecoveryMeter>,
) -> Result<(FactorPair, SolveReport)> {
    rgd_solve(problem, init, config, step_size, 0.0, meter)
}

pub fn rgd_solve(
    problem: &Problem,
    init: &FactorPair,
    config: &GnimcConfig,
    step_size: f64,
    lambda: f64,
    meter: Option<&RecoveryMeter>,
) -> Result<(FactorPair, SolveReport)> {
    check_step(step_size, lambda)?;
    let op = problem.sensing();
    init.check_dims(op.d1(), op.d2(), problem.rank())?;
    let mut iterate = init.clone();
    let mut state = GradState::new(op, &iterate);
    let mut tracker = Tracker::new(problem, config, meter, &iterate, state.entries.clone())?;
    while tracker.iter() < config.max_outer_iters {
        if tracker.out_of_time() {
            return Ok((iterate, tracker.finish(Termination::TimeLimit, None)));
        }
        let grad = gradient_at(problem, &iterate, &state, lambda);
        let next = match descend(&iterate, &grad, step_size) {
            Ok(n) => n,
            Err(e) => {
                return Ok((
                    iterate,
                    tracker.finish(Termination::NonFinite, Some(e.to_string())),
                ))
            }
        };
        let next_state = GradState::new(op, &next);
        if next_state.entries.iter().any(|v| !v.is_finite()) {
            let msg = Error::NonFinite("gradient step").to_string();
            return Ok((iterate, tracker.finish(Termination::NonFinite, Some(msg))));
        }
        iterate = next;
        state = next_state;
        if let Some(t) = tracker.record(&iterate, state.entries.clone(), 0) {
            return Ok((iterate, tracker.finish(t, None)));
        }
    }
    Ok((iterate, tracker.finish(Termination::MaxIters, None)))
}
