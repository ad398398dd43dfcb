use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnimc::GnimcConfig;
use crate::problem::{Dims, NoiseTarget};

/// How many entries to observe. Each variant is one point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSize {
    /// Oversampling ratio: `|Ω| = round(ρ (d1 + d2 − r) r)`.
    Rho(f64),
    /// Explicit `|Ω|`.
    Count(usize),
    /// Sampling rate: `|Ω| = round(p n1 n2)`.
    Rate(f64),
    /// `⌈(8/δ²) μ² d1 d2 log n⌉ / shrink`, the RIP sample size, capped at
    /// `n1 n2`.
    RipRate { delta: f64, shrink: f64 },
    /// `⌈factor μ² d1 d2 log n⌉`, the benign-landscape sample size.
    LandscapeRate { factor: f64 },
}

impl SampleSize {
    /// Resolves to a count given the instance's incoherence `mu`.
    pub fn count(&self, dims: &Dims, mu: f64) -> usize {
        let total = dims.n1 * dims.n2;
        let log_n = (dims.n1.max(dims.n2) as f64).ln();
        let d1d2 = (dims.d1 * dims.d2) as f64;
        let m = match *self {
            Self::Rho(rho) => dims.samples_for_ratio(rho),
            Self::Count(m) => m,
            Self::Rate(p) => (p * total as f64).round() as usize,
            Self::RipRate { delta, shrink } => {
                ((8.0 / (delta * delta)) * mu * mu * d1d2 * log_n / shrink).ceil() as usize
            }
            Self::LandscapeRate { factor } => (factor * mu * mu * d1d2 * log_n).ceil() as usize,
        };
        m.clamp(1, total)
    }

    /// Whether the count depends on `mu` (and so on the instance).
    pub fn needs_mu(&self) -> bool {
        matches!(self, Self::RipRate { .. } | Self::LandscapeRate { .. })
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Rho(v) => format!("rho={v}"),
            Self::Count(m) => format!("count={m}"),
            Self::Rate(p) => format!("rate={p}"),
            Self::RipRate { delta, shrink } => format!("rip_rate(delta={delta},shrink={shrink})"),
            Self::LandscapeRate { factor } => format!("landscape_rate(factor={factor})"),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match *self {
            Self::Rho(r) if !(r > 0.0) => bad(format!("rho must be positive, got {r}")),
            Self::Count(0) => bad("count must be >= 1".into()),
            Self::Rate(p) if !(p > 0.0 && p <= 1.0) => bad(format!("rate must lie in (0, 1], got {p}")),
            Self::RipRate { delta, shrink } if !(delta > 0.0 && shrink > 0.0) => {
                bad("rip_rate needs delta > 0 and shrink > 0".into())
            }
            Self::LandscapeRate { factor } if !(factor > 0.0) => {
                bad("landscape_rate needs factor > 0".into())
            }
            _ => Ok(()),
        }
    }
}

/// Step size for the gradient baselines, as a multiple of `1/(κ p)`.
///
/// The literal step applied to `‖P_Ω(X) − Y‖²` is `value / (κ p)`, so the
/// grid `10^lo … 10^hi` matches the `10⁻²/κ … 10^½/κ` tuning range once the
/// `1/p` curvature scale of the sampled objective is factored out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    Fixed(f64),
    /// `num` log-spaced values from `10^lo_exp` to `10^hi_exp`, tuned on a
    /// pilot instance.
    Grid { num: usize, lo_exp: f64, hi_exp: f64 },
}

impl Default for StepSpec {
    fn default() -> Self {
        Self::Grid {
            num: 10,
            lo_exp: -2.0,
            hi_exp: 0.5,
        }
    }
}

impl StepSpec {
    /// Normalized candidates, largest first.
    pub fn candidates(&self) -> Vec<f64> {
        match *self {
            Self::Fixed(v) => vec![v],
            Self::Grid { num, lo_exp, hi_exp } => {
                if num == 1 {
                    return vec![10f64.powf(hi_exp)];
                }
                (0..num)
                    .rev()
                    .map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (num - 1) as f64))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    Gnimc {
        #[serde(default)]
        config: GnimcConfig,
    },
    Altmin {
        #[serde(default)]
        config: GnimcConfig,
    },
    Gd {
        #[serde(default)]
        config: GnimcConfig,
        #[serde(default)]
        step: StepSpec,
    },
    Rgd {
        #[serde(default)]
        config: GnimcConfig,
        #[serde(default)]
        step: StepSpec,
        /// Imbalance weight as a multiple of `p`.
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

fn default_lambda() -> f64 {
    1.0
}

impl SolverSpec {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Gnimc { .. } => "gnimc",
            Self::Altmin { .. } => "altmin",
            Self::Gd { .. } => "gd",
            Self::Rgd { .. } => "rgd",
        }
    }

    pub fn config(&self) -> &GnimcConfig {
        match self {
            Self::Gnimc { config }
            | Self::Altmin { config }
            | Self::Gd { config, .. }
            | Self::Rgd { config, .. } => config,
        }
    }

    pub fn config_mut(&mut self) -> &mut GnimcConfig {
        match self {
            Self::Gnimc { config }
            | Self::Altmin { config }
            | Self::Gd { config, .. }
            | Self::Rgd { config, .. } => config,
        }
    }

    pub fn step(&self) -> Option<&StepSpec> {
        match self {
            Self::Gd { step, .. } | Self::Rgd { step, .. } => Some(step),
            _ => None,
        }
    }

    pub fn gnimc() -> Self {
        Self::Gnimc {
            config: GnimcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// One projected-gradient step from zero, balanced.
    #[default]
    Spectral,
    ProjectedGradient { iters: usize },
    /// I.i.d. normal entries with the given variance (default `1/√max(d1,d2)`).
    Random { variance: Option<f64> },
}

/// Value of `D` in the rank estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DChoice {
    Zero,
    /// `(√(d1 d2)/|Ω|)^½`.
    Default,
    Value(f64),
}

impl DChoice {
    pub fn label(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Default => "default".into(),
            Self::Value(v) => format!("{v}"),
        }
    }

    pub fn resolve(&self) -> Option<f64> {
        match *self {
            Self::Zero => Some(0.0),
            Self::Default => None,
            Self::Value(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankSpec {
    pub d_choices: Vec<DChoice>,
    /// Rank the estimator should find.
    pub expected_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMatrix {
    Gaussian,
    Conditioned(f64),
}

impl TestMatrix {
    pub fn label(&self) -> String {
        match self {
            Self::Gaussian => "gaussian".into(),
            Self::Conditioned(k) => format!("kappa={k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipSpec {
    pub rank_tested: usize,
    pub trials: usize,
    pub test_matrices: Vec<TestMatrix>,
    /// Threshold reported as the fraction of seeds with `δ̂ ≤ delta`.
    pub delta: f64,
}

/// Pass/fail rule evaluated after a run; failure maps to exit code 3.
///
/// For solver sweeps a run succeeds when its final rel-RMSE is at most
/// `target`. Rank experiments count seeds with the expected rank, per `D`;
/// RIP experiments count seeds with `δ̂ ≤ rip.delta` at sample sizes at or
/// above the guarantee's rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Acceptance {
    /// Solver id for sweeps; informational for rank and RIP experiments.
    pub solver: String,
    pub target: f64,
    /// Required fraction of successes in every setting.
    pub min_success_fraction: f64,
}

/// A complete experiment. JSON field names are the documented schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dims: Dims,
    /// Condition numbers to sweep (ignored when `spectrum` is set).
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    /// Explicit spectrum of `M*`; overrides `kappas` and `dims.r`.
    #[serde(default)]
    pub spectrum: Option<Vec<f64>>,
    pub sample_sizes: Vec<SampleSize>,
    #[serde(default = "default_sigmas")]
    pub noise_sigmas: Vec<f64>,
    #[serde(default = "default_targets")]
    pub noise_targets: Vec<NoiseTarget>,
    #[serde(default)]
    pub solvers: Vec<SolverSpec>,
    #[serde(default)]
    pub init: InitSpec,
    pub num_seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Per-run wall-clock limit, applied to every solver.
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
    /// Rel-RMSE used for success counts and time-to-target columns.
    #[serde(default = "default_target")]
    pub target_rel_rmse: f64,
    /// Stop each run as soon as it reaches `target_rel_rmse`.
    #[serde(default)]
    pub stop_at_target: bool,
    #[serde(default)]
    pub write_traces: Option<bool>,
    #[serde(default)]
    pub rank: Option<RankSpec>,
    #[serde(default)]
    pub rip: Option<RipSpec>,
    #[serde(default)]
    pub acceptance: Option<Acceptance>,
    /// Output directory; the CLI's `--out` overrides it.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_kappas() -> Vec<f64> {
    vec![10.0]
}

fn default_sigmas() -> Vec<f64> {
    vec![0.0]
}

fn default_targets() -> Vec<NoiseTarget> {
    vec![NoiseTarget::Entries]
}

fn default_target() -> f64 {
    1e-4
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config does not match the schema: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The rank actually used: the spectrum length if one is given.
    pub fn rank(&self) -> usize {
        self.spectrum.as_ref().map_or(self.dims.r, Vec::len)
    }

    pub fn effective_dims(&self) -> Dims {
        Dims {
            r: self.rank(),
            ..self.dims
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.name.is_empty() {
            return err("name must not be empty".into());
        }
        self.effective_dims()
            .validate()
            .map_err(|e| Error::Config(format!("dims: {e}")))?;
        if self.num_seeds == 0 {
            return err("num_seeds must be >= 1".into());
        }
        if self.sample_sizes.is_empty() {
            return err("sample_sizes must list at least one entry, e.g. [{\"rho\": 1.5}]".into());
        }
        for s in &self.sample_sizes {
            s.validate()?;
        }
        if self.spectrum.is_none() {
            if self.kappas.is_empty() {
                return err("kappas must list at least one condition number".into());
            }
            if let Some(k) = self.kappas.iter().find(|k| !(**k >= 1.0)) {
                return err(format!("every kappa must be >= 1, got {k}"));
            }
            if self.dims.r == 1 && self.kappas.iter().any(|k| *k != 1.0) {
                return err("rank 1 requires kappa = 1".into());
            }
        }
        if let Some(s) = &self.spectrum {
            if s.iter().any(|v| !(*v > 0.0)) {
                return err("spectrum values must be positive".into());
            }
        }
        if self.noise_sigmas.is_empty() || self.noise_sigmas.iter().any(|s| !(*s >= 0.0)) {
            return err("noise_sigmas must be a nonempty list of values >= 0".into());
        }
        if self.noise_targets.is_empty() {
            return err("noise_targets must not be empty".into());
        }
        if !(self.target_rel_rmse > 0.0) {
            return err("target_rel_rmse must be positive".into());
        }
        if let Some(t) = self.time_limit_secs {
            if !(t > 0.0) {
                return err("time_limit_secs must be positive".into());
            }
        }
        for s in &self.solvers {
            s.config()
                .validate()
                .map_err(|e| Error::Config(format!("solver {}: {e}", s.id())))?;
            if let Some(step) = s.step() {
                let c = step.candidates();
                if c.is_empty() || c.iter().any(|v| !(*v > 0.0)) {
                    return err(format!("solver {}: step values must be positive", s.id()));
                }
            }
            if let SolverSpec::Rgd { lambda, .. } = s {
                if !(*lambda >= 0.0) {
                    return err("rgd lambda must be >= 0".into());
                }
            }
        }
        if let InitSpec::ProjectedGradient { iters: 0 } = self.init {
            return err("projected_gradient init needs iters >= 1".into());
        }
        if let Some(rip) = &self.rip {
            if rip.trials == 0 || rip.test_matrices.is_empty() {
                return err("rip needs trials >= 1 and at least one test matrix".into());
            }
            if rip.rank_tested == 0 || rip.rank_tested > self.dims.d1.min(self.dims.d2) {
                return err(format!(
                    "rip.rank_tested must lie in 1..={}",
                    self.dims.d1.min(self.dims.d2)
                ));
            }
        }
        if let Some(rank) = &self.rank {
            if rank.d_choices.is_empty() {
                return err("rank.d_choices must not be empty".into());
            }
        }
        if let Some(a) = &self.acceptance {
            if !(0.0..=1.0).contains(&a.min_success_fraction) {
                return err("acceptance.min_success_fraction must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Stable fingerprint of the configuration (same binary, same value).
    pub fn hash(&self) -> String {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.to_json().hash(&mut h);
        format!("{:016x}", h.finish())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "name": "t",
            "dims": {"n1": 100, "n2": 100, "d1": 10, "d2": 10, "r": 3},
            "sample_sizes": [{"rho": 1.5}],
            "solvers": [{"solver": "gnimc"}, {"solver": "gd", "step": {"fixed": 0.3}}],
            "num_seeds": 2
        }"#
    }

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(minimal()).unwrap();
        assert_eq!(c.kappas, vec![10.0]);
        assert_eq!(c.noise_sigmas, vec![0.0]);
        assert_eq!(c.solvers[1].step().unwrap().candidates(), vec![0.3]);
        assert_eq!(c.solvers[0].config().inner_iters_low_error, 10);
    }

    #[test]
    fn unknown_field_is_reported() {
        let text = minimal().replace("\"num_seeds\"", "\"seeds\"");
        let err = ExperimentConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("seeds"), "{err}");
    }

    #[test]
    fn validation_messages_name_the_field() {
        let text = minimal().replace("\"num_seeds\": 2", "\"num_seeds\": 0");
        let err = ExperimentConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("num_seeds"));
        let text = minimal().replace("{\"rho\": 1.5}", "{\"rate\": 2.0}");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn default_grid_spans_the_tuning_range() {
        let c = StepSpec::default().candidates();
        assert_eq!(c.len(), 10);
        assert!((c[0] - 10f64.powf(0.5)).abs() < 1e-12);
        assert!((c[9] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn sample_size_resolution() {
        let dims = Dims {
            n1: 1000,
            n2: 1000,
            d1: 20,
            d2: 20,
            r: 10,
        };
        assert_eq!(SampleSize::Rho(1.5).count(&dims, 1.0), 450);
        assert_eq!(SampleSize::Rate(0.01).count(&dims, 1.0), 10_000);
        let rip = SampleSize::RipRate { delta: 0.5, shrink: 1.0 }.count(&dims, 1.0);
        assert_eq!(rip, (32.0 * 400.0 * (1000f64).ln()).ceil() as usize);
        assert_eq!(SampleSize::Count(5_000_000).count(&dims, 1.0), 1_000_000);
    }
}
