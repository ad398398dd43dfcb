use nalgebra::DMatrix;

use crate::error::{mismatch, Error, Result};
use crate::init::balanced_split;
use crate::linops::{lsqr_min_norm, qr_thin, LinearMap, Matrix, Qr};
use crate::problem::{FactorPair, Problem};
use crate::sensing::SensingOp;

use super::GnimcConfig;

/// `ℒ_(U,V)(ΔU, ΔV) = P_Ω(A (U ΔVᵀ + ΔU Vᵀ) Bᵀ)`.
///
/// Unknowns are flattened as `[ΔU (d1 x r), ΔV (d2 x r)]`, each row-major.
pub struct LeastSquaresOp<'a> {
    op: &'a SensingOp,
    r: usize,
    /// `A U` and `B V` restricted to the sampled rows.
    au: Matrix,
    bv: Matrix,
}

impl<'a> LeastSquaresOp<'a> {
    pub fn new(op: &'a SensingOp, u: &Matrix, v: &Matrix) -> Result<Self> {
        if u.rows() != op.d1() || v.rows() != op.d2() || u.cols() != v.cols() {
            return Err(mismatch(
                format!("U {}xr, V {}xr", op.d1(), op.d2()),
                format!("U {:?}, V {:?}", u.shape(), v.shape()),
            ));
        }
        Ok(Self {
            op,
            r: u.cols(),
            au: op.a_rows().matmul(u),
            bv: op.b_rows().matmul(v),
        })
    }

    fn split(&self, x: &[f64]) -> (Matrix, Matrix) {
        let cut = self.op.d1() * self.r;
        (
            Matrix::from_vec(self.op.d1(), self.r, x[..cut].to_vec()),
            Matrix::from_vec(self.op.d2(), self.r, x[cut..].to_vec()),
        )
    }
}

impl LinearMap for LeastSquaresOp<'_> {
    fn domain_dim(&self) -> usize {
        (self.op.d1() + self.op.d2()) * self.r
    }

    fn codomain_dim(&self) -> usize {
        self.op.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (du, dv) = self.split(x);
        let bdv = self.op.b_rows().matmul(&dv);
        let adu = self.op.a_rows().matmul(&du);
        out.fill(0.0);
        self.op.add_pair_dots(&self.au, &bdv, out);
        self.op.add_pair_dots(&adu, &self.bv, out);
    }

    fn apply_adjoint(&self, z: &[f64], out: &mut [f64]) {
        let du = self.op.a_rows().t_matmul(&self.op.scatter_rows(z, &self.bv));
        let dv = self.op.b_rows().t_matmul(&self.op.scatter_cols(z, &self.au));
        let cut = du.as_slice().len();
        out[..cut].copy_from_slice(du.as_slice());
        out[cut..].copy_from_slice(dv.as_slice());
    }
}

/// One Gauss-Newton update.
#[derive(Debug, Clone)]
pub struct GnStep {
    pub next: FactorPair,
    /// The update `(ΔU, ΔV)` in the original coordinates.
    pub delta: FactorPair,
    pub inner_iters: usize,
}

/// Removes the component of `(ΔU, ΔV)` along `{(U R, −V Rᵀ) : R ∈ ℝ^{r×r}}`,
/// the kernel of `ℒ_(U,V)`.
///
/// The closest kernel element solves the Sylvester equation
/// `UᵀU R + R VᵀV = UᵀΔU − ΔVᵀV`, handled through its `r² x r²` Kronecker
/// form.
pub fn project_out_kernel(
    u: &Matrix,
    v: &Matrix,
    du: &Matrix,
    dv: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let r = u.cols();
    let gu = u.t_matmul(u);
    let gv = v.t_matmul(v);
    let c = u.t_matmul(du).sub(&dv.t_matmul(v));
    let n = r * r;
    // Row-major vec: vec(G_U R) = (G_U ⊗ I) vec R, vec(R G_V) = (I ⊗ G_Vᵀ) vec R.
    let kron = DMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row / r, row % r);
        let (k, l) = (col / r, col % r);
        let mut s = 0.0;
        if j == l {
            s += gu[(i, k)];
        }
        if i == k {
            s += gv[(l, j)];
        }
        s
    });
    let rhs = nalgebra::DVector::from_row_slice(c.as_slice());
    let sol = match kron.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => kron
            .lu()
            .solve(&rhs)
            .ok_or(Error::RankDeficient { rank: 0, cols: r })?,
    };
    let rmat = Matrix::from_vec(r, r, sol.iter().copied().collect());
    let du = du.sub(&u.matmul(&rmat));
    let dv = dv.add(&v.matmul_t(&rmat));
    if !du.is_finite() || !dv.is_finite() {
        return Err(Error::NonFinite("kernel projection"));
    }
    Ok((du, dv))
}

/// Gauss-Newton step with an explicit inner LSQR cap.
pub fn gnimc_step_capped(
    problem: &Problem,
    iterate: &FactorPair,
    inner_cap: usize,
    config: &GnimcConfig,
) -> Result<GnStep> {
    let op = problem.sensing();
    let r = problem.rank();
    iterate.check_dims(op.d1(), op.d2(), r)?;
    let Qr { q: qu, r: ru } = qr_thin(&iterate.u)?;
    let Qr { q: qv, r: rv } = qr_thin(&iterate.v)?;

    let mut b = op.sample_factored(&iterate.u, &iterate.v);
    for (e, y) in b.iter_mut().zip(problem.y()) {
        *e = y - *e;
    }
    let lsop = LeastSquaresOp::new(op, &qu, &qv)?;
    let sol = lsqr_min_norm(&lsop, &b, inner_cap, config.lsqr_tol)?;
    let cut = op.d1() * r;
    let du_pre = Matrix::from_vec(op.d1(), r, sol.x[..cut].to_vec());
    let dv_pre = Matrix::from_vec(op.d2(), r, sol.x[cut..].to_vec());
    let mut du = du_pre.solve_upper_transposed_right(&rv)?;
    let mut dv = dv_pre.solve_upper_transposed_right(&ru)?;
    if config.min_norm_projection_enabled {
        (du, dv) = project_out_kernel(&iterate.u, &iterate.v, &du, &dv)?;
    }
    let next = FactorPair {
        u: iterate.u.add(&du),
        v: iterate.v.add(&dv),
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("gnimc step"));
    }
    Ok(GnStep {
        next,
        delta: FactorPair { u: du, v: dv },
        inner_iters: sol.iters,
    })
}

/// One GNIMC iteration; the inner cap follows the configured schedule.
pub fn gnimc_step(
    problem: &Problem,
    iterate: &FactorPair,
    config: &GnimcConfig,
) -> Result<(FactorPair, usize)> {
    let op = problem.sensing();
    let x = op.sample_factored(&iterate.u, &iterate.v);
    let y = problem.y();
    let resid: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let y_norm = crate::linops::norm(y);
    let rel = if y_norm > 0.0 { resid / y_norm } else { resid };
    let step = gnimc_step_capped(problem, iterate, config.inner_cap(rel), config)?;
    Ok((step.next, step.inner_iters))
}

/// `(Ū Σ^½, V̄ Σ^½)` from the SVD of `U Vᵀ`.
pub fn balance(iterate: &FactorPair) -> Result<FactorPair> {
    let product = iterate.product();
    if product.max_abs() == 0.0 {
        return Err(Error::BadDims("cannot balance a zero product".into()));
    }
    balanced_split(&product, iterate.rank())
}
