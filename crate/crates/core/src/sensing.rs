//! The sampling operator `P_Ω`, the subspace projector `P_AB` and the IMC
//! sensing operator `𝒜(M) = vec_Ω(A M Bᵀ) / √p`.
//!
//! [`SensingOp`] keeps only the rows of `A` and `B` that Ω touches, so every
//! application costs `O(k1·d1·c + k2·d2·c + |Ω|·c)` for `c`-column factors,
//! where `k1`, `k2` count distinct sampled rows and columns.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{mismatch, Error, Result};
use crate::linops::{dot, qr_thin, LinearMap, Matrix};
use crate::problem::{linear_spectrum, SampleSet, SideInfo};
use crate::random::{derive_seed, gaussian_matrix, rng_from_seed};

#[derive(Debug, Clone)]
pub struct SensingOp {
    d1: usize,
    d2: usize,
    len: usize,
    scale: f64,
    /// Distinct sampled rows of `A` (`k1 x d1`) and of `B` (`k2 x d2`).
    a_rows: Matrix,
    b_rows: Matrix,
    /// Per sample: index into `a_rows` and `b_rows`.
    row_slot: Vec<usize>,
    col_slot: Vec<usize>,
}

fn compact(indices: &[usize], n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut slot_of = vec![usize::MAX; n];
    let mut distinct = Vec::new();
    let slots = indices
        .iter()
        .map(|&i| {
            if slot_of[i] == usize::MAX {
                slot_of[i] = distinct.len();
                distinct.push(i);
            }
            slot_of[i]
        })
        .collect();
    (distinct, slots)
}

impl SensingOp {
    pub fn new(side: &SideInfo, samples: &SampleSet) -> Self {
        let (rows, row_slot) = compact(samples.rows(), samples.n1());
        let (cols, col_slot) = compact(samples.cols(), samples.n2());
        Self {
            d1: side.d1(),
            d2: side.d2(),
            len: samples.len(),
            scale: 1.0 / samples.p().sqrt(),
            a_rows: side.a.select_rows(&rows),
            b_rows: side.b.select_rows(&cols),
            row_slot,
            col_slot,
        }
    }

    /// `|Ω|`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// `1/√p`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn p(&self) -> f64 {
        1.0 / (self.scale * self.scale)
    }

    /// Sampled rows of `A`, one per distinct row index in Ω.
    pub fn a_rows(&self) -> &Matrix {
        &self.a_rows
    }

    pub fn b_rows(&self) -> &Matrix {
        &self.b_rows
    }

    /// Entries `a_iᵀ m b_j` on Ω, unscaled.
    pub fn sample_dense(&self, m: &Matrix) -> Vec<f64> {
        assert_eq!(m.shape(), (self.d1, self.d2), "sample_dense shape");
        let am = self.a_rows.matmul(m);
        self.pair_dots(&am, &self.b_rows)
    }

    /// Entries of `A U Vᵀ Bᵀ` on Ω, unscaled.
    pub fn sample_factored(&self, u: &Matrix, v: &Matrix) -> Vec<f64> {
        self.pair_dots(&self.a_rows.matmul(u), &self.b_rows.matmul(v))
    }

    /// `out_k = left[row_slot k] · right[col_slot k]` for lifted factors.
    pub fn pair_dots(&self, left: &Matrix, right: &Matrix) -> Vec<f64> {
        self.row_slot
            .iter()
            .zip(&self.col_slot)
            .map(|(&i, &j)| dot(left.row(i), right.row(j)))
            .collect()
    }

    /// `out_k += left[row_slot k] · right[col_slot k]`.
    pub fn add_pair_dots(&self, left: &Matrix, right: &Matrix, out: &mut [f64]) {
        for ((o, &i), &j) in out.iter_mut().zip(&self.row_slot).zip(&self.col_slot) {
            *o += dot(left.row(i), right.row(j));
        }
    }

    /// `Σ_k z_k e_{row k} right[col_slot k]ᵀ`: a `k1 x c` matrix.
    pub fn scatter_rows(&self, z: &[f64], right: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.a_rows.rows(), right.cols());
        for ((&zk, &i), &j) in z.iter().zip(&self.row_slot).zip(&self.col_slot) {
            crate::linops::axpy(zk, right.row(j), out.row_mut(i));
        }
        out
    }

    /// `Σ_k z_k e_{col k} left[row_slot k]ᵀ`: a `k2 x c` matrix.
    pub fn scatter_cols(&self, z: &[f64], left: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.b_rows.rows(), left.cols());
        for ((&zk, &i), &j) in z.iter().zip(&self.row_slot).zip(&self.col_slot) {
            crate::linops::axpy(zk, left.row(i), out.row_mut(j));
        }
        out
    }

    /// `Aᵀ P_Ω*(z) B`, unscaled.
    pub fn adjoint_unscaled(&self, z: &[f64]) -> Matrix {
        assert_eq!(z.len(), self.len, "adjoint length");
        self.a_rows.t_matmul(&self.scatter_rows(z, &self.b_rows))
    }
}

/// `𝒜(m) = vec_Ω(A m Bᵀ) / √p`.
pub fn apply_sensing(op: &SensingOp, m: &Matrix) -> Result<Vec<f64>> {
    if m.shape() != (op.d1, op.d2) {
        return Err(mismatch(
            format!("{}x{}", op.d1, op.d2),
            format!("{:?}", m.shape()),
        ));
    }
    let mut y = op.sample_dense(m);
    y.iter_mut().for_each(|v| *v *= op.scale);
    Ok(y)
}

/// `𝒜(U Vᵀ)` without forming `U Vᵀ`.
pub fn apply_sensing_factored(op: &SensingOp, u: &Matrix, v: &Matrix) -> Result<Vec<f64>> {
    if u.rows() != op.d1 || v.rows() != op.d2 || u.cols() != v.cols() {
        return Err(mismatch(
            format!("U {}xr, V {}xr", op.d1, op.d2),
            format!("U {:?}, V {:?}", u.shape(), v.shape()),
        ));
    }
    let mut y = op.sample_factored(u, v);
    y.iter_mut().for_each(|e| *e *= op.scale);
    Ok(y)
}

/// `𝒜*(y) = Aᵀ P_Ω*(y) B / √p`.
pub fn adjoint_sensing(op: &SensingOp, y: &[f64]) -> Result<Matrix> {
    if y.len() != op.len {
        return Err(mismatch(op.len, y.len()));
    }
    let mut m = op.adjoint_unscaled(y);
    m.scale_mut(op.scale);
    Ok(m)
}

impl LinearMap for SensingOp {
    fn domain_dim(&self) -> usize {
        self.d1 * self.d2
    }

    fn codomain_dim(&self) -> usize {
        self.len
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = Matrix::from_vec(self.d1, self.d2, x.to_vec());
        for (o, v) in out.iter_mut().zip(self.sample_dense(&m)) {
            *o = v * self.scale;
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        let m = self.adjoint_unscaled(y);
        for (o, v) in out.iter_mut().zip(m.as_slice()) {
            *o = v * self.scale;
        }
    }
}

/// `A Aᵀ X B Bᵀ`.
pub fn project_ab(side: &SideInfo, x: &Matrix) -> Result<Matrix> {
    if x.shape() != (side.n1(), side.n2()) {
        return Err(mismatch(
            format!("{}x{}", side.n1(), side.n2()),
            format!("{:?}", x.shape()),
        ));
    }
    let core = side.a.t_matmul(x).matmul(&side.b);
    Ok(side.a.matmul(&core).matmul_t(&side.b))
}

/// Empirical RIP witness over random low-rank test matrices.
///
/// `delta_hat` is a lower bound on the true RIP constant: it only sees the
/// matrices it drew.
#[derive(Debug, Clone, Serialize)]
pub struct RipProbeReport {
    pub delta_hat: f64,
    pub trials: usize,
    pub rank_tested: usize,
    pub ratios: Vec<f64>,
}

impl RipProbeReport {
    fn from_ratios(ratios: Vec<f64>, rank_tested: usize) -> Self {
        let delta_hat = ratios.iter().fold(0.0f64, |m, r| m.max((r - 1.0).abs()));
        Self {
            delta_hat,
            trials: ratios.len(),
            rank_tested,
            ratios,
        }
    }
}

fn check_probe(op: &SensingOp, rank_tested: usize, trials: usize) -> Result<()> {
    if rank_tested == 0 || rank_tested > op.d1.min(op.d2) {
        return Err(Error::BadDims(format!(
            "rank_tested {rank_tested} outside 1..={}",
            op.d1.min(op.d2)
        )));
    }
    if trials == 0 {
        return Err(Error::Config("rip probe needs at least one trial".into()));
    }
    Ok(())
}

fn ratio(op: &SensingOp, u: &Matrix, v: &Matrix) -> f64 {
    let m = u.matmul_t(v);
    let y = op.sample_factored(u, v);
    dot(&y, &y) * op.scale * op.scale / m.frobenius_norm().powi(2)
}

/// Ratios `‖𝒜(M)‖² / ‖M‖_F²` for `M = G₁ G₂ᵀ` with Gaussian factors.
pub fn rip_probe(op: &SensingOp, rank_tested: usize, trials: usize, seed: u64) -> Result<RipProbeReport> {
    check_probe(op, rank_tested, trials)?;
    let ratios = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let u = gaussian_matrix(op.d1, rank_tested, &mut rng);
            let v = gaussian_matrix(op.d2, rank_tested, &mut rng);
            ratio(op, &u, &v)
        })
        .collect();
    Ok(RipProbeReport::from_ratios(ratios, rank_tested))
}

/// Like [`rip_probe`] with test matrices `U diag(s) Vᵀ`, `U`, `V` orthonormal
/// and `s` linearly spaced in `[1, kappa]`.
pub fn rip_probe_conditioned(
    op: &SensingOp,
    rank_tested: usize,
    trials: usize,
    kappa: f64,
    seed: u64,
) -> Result<RipProbeReport> {
    check_probe(op, rank_tested, trials)?;
    if !(kappa >= 1.0) {
        return Err(Error::Config(format!("kappa must be >= 1, got {kappa}")));
    }
    let spectrum = linear_spectrum(rank_tested, kappa);
    let ratios = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let u = qr_thin(&gaussian_matrix(op.d1, rank_tested, &mut rng))?.q;
            let v = qr_thin(&gaussian_matrix(op.d2, rank_tested, &mut rng))?.q;
            Ok(ratio(op, &u.scale_cols(&spectrum), &v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RipProbeReport::from_ratios(ratios, rank_tested))
}
