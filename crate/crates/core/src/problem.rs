//! Problem data model, the synthetic generator and recovery metrics.
//!
//! A [`GroundTruth`] holds `X* = A M* Bᵀ` in factored form. Sampling it gives
//! a [`Problem`], which is everything a solver is allowed to see: the side
//! information, the sample set and the observed values. The truth never
//! enters a solver; [`RecoveryMeter`] measures iterates against it.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::linops::{qr_thin, singular_values, Matrix};
use crate::random::{gaussian_matrix, rng_from_seed, standard_normal};
use crate::sensing::SensingOp;

/// Problem sizes: `X*` is `n1 x n2`, the features have `d1` and `d2` columns
/// and the target rank is `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub d1: usize,
    pub d2: usize,
    pub r: usize,
}

impl Dims {
    pub fn validate(&self) -> Result<()> {
        let Dims { n1, n2, d1, d2, r } = *self;
        if r == 0 || r > d1 || r > d2 || d1 > n1 || d2 > n2 {
            return Err(Error::BadDims(format!(
                "need 1 <= r <= d1 <= n1 and r <= d2 <= n2, got n1={n1} n2={n2} d1={d1} d2={d2} r={r}"
            )));
        }
        Ok(())
    }

    /// Degrees of freedom of a rank-`r` matrix `A M Bᵀ`: `(d1 + d2 − r)·r`.
    pub fn degrees_of_freedom(&self) -> usize {
        (self.d1 + self.d2 - self.r) * self.r
    }

    /// `|Ω| = round(ρ · (d1 + d2 − r) · r)`.
    pub fn samples_for_ratio(&self, rho: f64) -> usize {
        (rho * self.degrees_of_freedom() as f64).round() as usize
    }
}

/// Isometric feature matrices and their joint incoherence.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfo {
    pub a: Matrix,
    pub b: Matrix,
    pub mu: f64,
}

impl SideInfo {
    /// Checks column orthonormality and computes `mu`.
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        let mu = incoherence(&a)?.max(incoherence(&b)?);
        Ok(Self { a, b, mu })
    }

    /// Orthonormalizes the columns of arbitrary full-rank `a` and `b`.
    pub fn orthonormalized(a: &Matrix, b: &Matrix) -> Result<Self> {
        Self::new(qr_thin(a)?.q, qr_thin(b)?.q)
    }

    pub fn n1(&self) -> usize {
        self.a.rows()
    }

    pub fn n2(&self) -> usize {
        self.b.rows()
    }

    pub fn d1(&self) -> usize {
        self.a.cols()
    }

    pub fn d2(&self) -> usize {
        self.b.cols()
    }
}

/// Distinct observed cells `(rows[k], cols[k])`, sorted row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    n1: usize,
    n2: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl SampleSet {
    /// Validates ranges and rejects duplicates. Order is normalized.
    pub fn new(n1: usize, n2: usize, rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(mismatch(rows.len(), cols.len()));
        }
        if rows.is_empty() {
            return Err(Error::BadDims("sample set is empty".into()));
        }
        let mut cells = Vec::with_capacity(rows.len());
        for (&i, &j) in rows.iter().zip(&cols) {
            if i >= n1 || j >= n2 {
                return Err(Error::BadDims(format!(
                    "sample ({i},{j}) outside {n1}x{n2}"
                )));
            }
            cells.push(i * n2 + j);
        }
        cells.sort_unstable();
        if cells.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadDims("duplicate sample cell".into()));
        }
        Ok(Self::from_sorted_cells(n1, n2, &cells))
    }

    fn from_sorted_cells(n1: usize, n2: usize, cells: &[usize]) -> Self {
        Self {
            n1,
            n2,
            rows: cells.iter().map(|c| c / n2).collect(),
            cols: cells.iter().map(|c| c % n2).collect(),
        }
    }

    /// Every cell of the grid.
    pub fn full(n1: usize, n2: usize) -> Self {
        let cells: Vec<usize> = (0..n1 * n2).collect();
        Self::from_sorted_cells(n1, n2, &cells)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Sampling rate `|Ω| / (n1 n2)`.
    pub fn p(&self) -> f64 {
        self.len() as f64 / (self.n1 as f64 * self.n2 as f64)
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().copied().zip(self.cols.iter().copied())
    }
}

/// Draws `m` distinct cells uniformly among all `m`-subsets of the grid.
pub fn sample_omega(n1: usize, n2: usize, m: usize, seed: u64) -> Result<SampleSet> {
    let total = n1
        .checked_mul(n2)
        .ok_or_else(|| Error::BadDims("grid size overflows".into()))?;
    if m == 0 || m > total {
        return Err(Error::BadDims(format!(
            "cannot sample {m} cells from a {n1}x{n2} grid"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut cells = index::sample(&mut rng, total, m).into_vec();
    cells.sort_unstable();
    Ok(SampleSet::from_sorted_cells(n1, n2, &cells))
}

/// Synthetic ground truth `X* = A · M* · Bᵀ` with `M* = U* diag(spectrum) V*ᵀ`.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub side: SideInfo,
    pub u_star: Matrix,
    pub v_star: Matrix,
    pub m_star: Matrix,
    /// Nonzero singular values of `M*`, descending.
    pub spectrum: Vec<f64>,
    pub kappa: f64,
    pub seed: u64,
}

impl GroundTruth {
    pub fn rank(&self) -> usize {
        self.spectrum.len()
    }

    pub fn dims(&self) -> Dims {
        Dims {
            n1: self.side.n1(),
            n2: self.side.n2(),
            d1: self.side.d1(),
            d2: self.side.d2(),
            r: self.rank(),
        }
    }

    /// Materializes `X*`. Only sensible for small `n1 n2`.
    pub fn dense(&self) -> Matrix {
        self.side.a.matmul(&self.m_star).matmul_t(&self.side.b)
    }

    /// Exact entries of `X*` on `samples`.
    pub fn entries(&self, samples: &SampleSet) -> Vec<f64> {
        SensingOp::new(&self.side, samples).sample_dense(&self.m_star)
    }

    /// Balanced factors `(U* Σ^½, V* Σ^½)` of `M*`.
    pub fn balanced_factors(&self) -> FactorPair {
        let root: Vec<f64> = self.spectrum.iter().map(|s| s.sqrt()).collect();
        FactorPair {
            u: self.u_star.scale_cols(&root),
            v: self.v_star.scale_cols(&root),
        }
    }
}

/// Spectrum linearly spaced between `1` and `kappa`, sorted descending.
pub fn linear_spectrum(r: usize, kappa: f64) -> Vec<f64> {
    if r == 1 {
        return vec![1.0];
    }
    (0..r)
        .rev()
        .map(|k| 1.0 + (kappa - 1.0) * k as f64 / (r - 1) as f64)
        .collect()
}

/// Generates `A, B, U*, V*` from standard normals, orthonormalizes their
/// columns and sets `M* = U* D V*ᵀ` with `D` linearly spaced in `[1, kappa]`.
pub fn generate(dims: Dims, kappa: f64, seed: u64) -> Result<GroundTruth> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::BadDims(format!("kappa must be finite and >= 1, got {kappa}")));
    }
    if dims.r == 1 && kappa != 1.0 {
        return Err(Error::BadDims("a rank-1 truth has condition number 1".into()));
    }
    generate_with_spectrum(dims, &linear_spectrum(dims.r, kappa), seed)
}

/// Same construction as [`generate`] with an arbitrary positive spectrum.
/// `dims.r` must equal `spectrum.len()`.
pub fn generate_with_spectrum(dims: Dims, spectrum: &[f64], seed: u64) -> Result<GroundTruth> {
    dims.validate()?;
    if spectrum.len() != dims.r {
        return Err(mismatch(format!("{} singular values", dims.r), spectrum.len()));
    }
    if spectrum.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::BadDims("spectrum must be positive and finite".into()));
    }
    let mut spectrum = spectrum.to_vec();
    spectrum.sort_by(|a, b| b.total_cmp(a));

    let mut rng = rng_from_seed(seed);
    let a = gaussian_matrix(dims.n1, dims.d1, &mut rng);
    let b = gaussian_matrix(dims.n2, dims.d2, &mut rng);
    let u = gaussian_matrix(dims.d1, dims.r, &mut rng);
    let v = gaussian_matrix(dims.d2, dims.r, &mut rng);
    let side = SideInfo::orthonormalized(&a, &b)?;
    let u_star = qr_thin(&u)?.q;
    let v_star = qr_thin(&v)?.q;
    let m_star = u_star.scale_cols(&spectrum).matmul_t(&v_star);
    let kappa = spectrum[0] / spectrum[dims.r - 1];
    Ok(GroundTruth {
        side,
        u_star,
        v_star,
        m_star,
        spectrum,
        kappa,
        seed,
    })
}

/// Where additive Gaussian noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    /// Observed values only.
    #[default]
    Entries,
    /// The feature matrices `A`, `B` handed to the solver.
    Features,
    Both,
}

impl NoiseTarget {
    fn entries(self) -> bool {
        matches!(self, Self::Entries | Self::Both)
    }

    fn features(self) -> bool {
        matches!(self, Self::Features | Self::Both)
    }
}

/// The observed instance: all a solver may use.
#[derive(Debug, Clone)]
pub struct Problem {
    side: SideInfo,
    samples: SampleSet,
    y: Vec<f64>,
    rank: usize,
    noise_sigma: f64,
    op: SensingOp,
}

impl Problem {
    pub fn new(
        side: SideInfo,
        samples: SampleSet,
        y: Vec<f64>,
        rank: usize,
        noise_sigma: f64,
    ) -> Result<Self> {
        if samples.n1() != side.n1() || samples.n2() != side.n2() {
            return Err(mismatch(
                format!("{}x{} grid", side.n1(), side.n2()),
                format!("{}x{}", samples.n1(), samples.n2()),
            ));
        }
        if y.len() != samples.len() {
            return Err(mismatch(samples.len(), y.len()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observed values"));
        }
        if rank == 0 || rank > side.d1().min(side.d2()) {
            return Err(Error::BadDims(format!(
                "rank {rank} outside 1..={}",
                side.d1().min(side.d2())
            )));
        }
        let op = SensingOp::new(&side, &samples);
        Ok(Self {
            side,
            samples,
            y,
            rank,
            noise_sigma,
            op,
        })
    }

    pub fn side(&self) -> &SideInfo {
        &self.side
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn p(&self) -> f64 {
        self.samples.p()
    }

    pub fn sensing(&self) -> &SensingOp {
        &self.op
    }

    /// Same instance with the observed values multiplied by `c`.
    pub fn with_scaled_observations(&self, c: f64) -> Result<Self> {
        let y = self.y.iter().map(|v| v * c).collect();
        Self::new(
            self.side.clone(),
            self.samples.clone(),
            y,
            self.rank,
            self.noise_sigma,
        )
    }
}

/// Observes `truth` on `samples` with i.i.d. `N(0, noise_sigma²)` entry noise.
pub fn observe(
    truth: &GroundTruth,
    samples: SampleSet,
    noise_sigma: f64,
    seed: u64,
) -> Result<Problem> {
    observe_with(truth, samples, noise_sigma, NoiseTarget::Entries, seed)
}

/// Like [`observe`], choosing where the noise goes. Perturbed features are
/// re-orthonormalized so the solver still receives isometries.
pub fn observe_with(
    truth: &GroundTruth,
    samples: SampleSet,
    noise_sigma: f64,
    target: NoiseTarget,
    seed: u64,
) -> Result<Problem> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::Config(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut y = truth.entries(&samples);
    let side = if target.features() && noise_sigma > 0.0 {
        let mut perturb = |m: &Matrix| {
            let mut out = m.clone();
            out.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v += noise_sigma * standard_normal(&mut rng));
            out
        };
        let a = perturb(&truth.side.a);
        let b = perturb(&truth.side.b);
        SideInfo::orthonormalized(&a, &b)?
    } else {
        truth.side.clone()
    };
    if target.entries() && noise_sigma > 0.0 {
        y.iter_mut()
            .for_each(|v| *v += noise_sigma * standard_normal(&mut rng));
    }
    Problem::new(side, samples, y, truth.rank(), noise_sigma)
}

/// `‖truth − estimate‖_F / ‖truth‖_F`.
pub fn rel_rmse(estimate: &Matrix, truth: &Matrix) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(mismatch(
            format!("{:?}", truth.shape()),
            format!("{:?}", estimate.shape()),
        ));
    }
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::ZeroTruth);
    }
    Ok(truth.sub(estimate).frobenius_norm() / denom)
}

/// `max_i n ‖row_i‖² / d` of an isometry.
pub fn incoherence(iso: &Matrix) -> Result<f64> {
    let (n, d) = iso.shape();
    if d == 0 || n < d {
        return Err(Error::BadDims(format!("isometry must be tall, got {n}x{d}")));
    }
    let dev = iso.t_matmul(iso).sub(&Matrix::identity(d)).max_abs();
    if !(dev <= 1e-8) {
        return Err(Error::NotIsometry(dev));
    }
    let max_row = (0..n)
        .map(|i| iso.row(i).iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(n as f64 * max_row / d as f64)
}

/// The iterate `M = U Vᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    pub u: Matrix,
    pub v: Matrix,
}

impl FactorPair {
    pub fn new(u: Matrix, v: Matrix) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(mismatch(u.cols(), v.cols()));
        }
        Ok(Self { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    /// `U Vᵀ`.
    pub fn product(&self) -> Matrix {
        self.u.matmul_t(&self.v)
    }

    /// `‖UᵀU − VᵀV‖_F`.
    pub fn imbalance(&self) -> f64 {
        self.u
            .t_matmul(&self.u)
            .sub(&self.v.t_matmul(&self.v))
            .frobenius_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub(crate) fn check_dims(&self, d1: usize, d2: usize, r: usize) -> Result<()> {
        if self.u.shape() != (d1, r) || self.v.shape() != (d2, r) {
            return Err(mismatch(
                format!("U {d1}x{r}, V {d2}x{r}"),
                format!("U {:?}, V {:?}", self.u.shape(), self.v.shape()),
            ));
        }
        Ok(())
    }
}

/// Rel-RMSE of `Â M Bˆᵀ` against `X*` without forming `n1 x n2` matrices.
///
/// With `C = ÂᵀX*B̂`, `‖X* − ÂMB̂ᵀ‖² = ‖M − C‖² + (‖X*‖² − ‖C‖²)`; the
/// second term is exactly zero when the solver sees the true features.
#[derive(Debug, Clone)]
pub struct RecoveryMeter {
    target: Matrix,
    out_of_span_sq: f64,
    truth_norm: f64,
}

impl RecoveryMeter {
    pub fn new(truth: &GroundTruth, side: &SideInfo) -> Result<Self> {
        let truth_norm = truth.m_star.frobenius_norm();
        if truth_norm == 0.0 {
            return Err(Error::ZeroTruth);
        }
        if side.a.shape() != truth.side.a.shape() || side.b.shape() != truth.side.b.shape() {
            return Err(mismatch(
                format!("{:?} / {:?}", truth.side.a.shape(), truth.side.b.shape()),
                format!("{:?} / {:?}", side.a.shape(), side.b.shape()),
            ));
        }
        if *side == truth.side {
            return Ok(Self {
                target: truth.m_star.clone(),
                out_of_span_sq: 0.0,
                truth_norm,
            });
        }
        let ga = side.a.t_matmul(&truth.side.a);
        let gb = side.b.t_matmul(&truth.side.b);
        let target = ga.matmul(&truth.m_star).matmul_t(&gb);
        let out_of_span_sq = (truth_norm.powi(2) - target.frobenius_norm().powi(2)).max(0.0);
        Ok(Self {
            target,
            out_of_span_sq,
            truth_norm,
        })
    }

    /// `‖X* − X̂‖_F` for `X̂ = Â m B̂ᵀ`.
    pub fn abs_error(&self, m: &Matrix) -> f64 {
        (self.target.sub(m).frobenius_norm().powi(2) + self.out_of_span_sq).sqrt()
    }

    pub fn rel_error(&self, m: &Matrix) -> f64 {
        self.abs_error(m) / self.truth_norm
    }

    pub fn truth_norm(&self) -> f64 {
        self.truth_norm
    }
}

/// Serialized problem for replay. Field names are part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub n1: usize,
    pub n2: usize,
    pub d1: usize,
    pub d2: usize,
    pub rank: usize,
    pub kappa: f64,
    /// Seed of the generator that produced `A`, `B` and `M*`.
    pub seed: u64,
    pub spectrum: Vec<f64>,
    pub noise_sigma: f64,
    #[serde(default)]
    pub noise_target: NoiseTarget,
    /// Seed of the noise stream used by [`observe_with`].
    pub observe_seed: u64,
    pub omega_rows: Vec<usize>,
    pub omega_cols: Vec<usize>,
    pub y: Vec<f64>,
}

impl ProblemDocument {
    pub fn new(truth: &GroundTruth, problem: &Problem, target: NoiseTarget, observe_seed: u64) -> Self {
        let d = truth.dims();
        Self {
            n1: d.n1,
            n2: d.n2,
            d1: d.d1,
            d2: d.d2,
            rank: d.r,
            kappa: truth.kappa,
            seed: truth.seed,
            spectrum: truth.spectrum.clone(),
            noise_sigma: problem.noise_sigma(),
            noise_target: target,
            observe_seed,
            omega_rows: problem.samples().rows().to_vec(),
            omega_cols: problem.samples().cols().to_vec(),
            y: problem.y().to_vec(),
        }
    }

    /// Regenerates the truth from `seed` and rebuilds the observed problem
    /// from the stored cells and values.
    pub fn replay(&self) -> Result<(GroundTruth, Problem)> {
        let dims = Dims {
            n1: self.n1,
            n2: self.n2,
            d1: self.d1,
            d2: self.d2,
            r: self.rank,
        };
        let truth = generate_with_spectrum(dims, &self.spectrum, self.seed)?;
        let samples = SampleSet::new(
            self.n1,
            self.n2,
            self.omega_rows.clone(),
            self.omega_cols.clone(),
        )?;
        // Noisy features are a function of the seed; rebuild them, then use
        // the stored values verbatim.
        let side = observe_with(
            &truth,
            samples.clone(),
            self.noise_sigma,
            self.noise_target,
            self.observe_seed,
        )?
        .side
        .clone();
        let problem = Problem::new(side, samples, self.y.clone(), self.rank, self.noise_sigma)?;
        Ok((truth, problem))
    }
}

/// Numerical rank: singular values above `tol · σ₁`.
pub fn numerical_rank(m: &Matrix, tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > tol * top).count(),
        _ => 0,
    }
}
