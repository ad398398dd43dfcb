use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::norm;
use crate::problem::{FactorPair, Problem, RecoveryMeter};

/// Solver settings shared by GNIMC and the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnimcConfig {
    pub max_outer_iters: usize,
    pub stop_eps: f64,
    pub inner_iters_low_error: usize,
    pub inner_iters_high_error: usize,
    /// Relative observed residual at or below which the low inner cap applies.
    pub low_error_threshold: f64,
    pub balancing_enabled: bool,
    pub min_norm_projection_enabled: bool,
    pub lsqr_tol: f64,
    /// Wall-clock budget; checked before every outer iteration.
    pub time_limit_secs: Option<f64>,
    /// Stop once rel-RMSE reaches this value. Needs a [`RecoveryMeter`].
    pub target_rel_rmse: Option<f64>,
}

impl Default for GnimcConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 100,
            stop_eps: 1e-14,
            inner_iters_low_error: 10,
            inner_iters_high_error: 1000,
            low_error_threshold: 1e-4,
            balancing_enabled: false,
            min_norm_projection_enabled: true,
            lsqr_tol: crate::linops::DEFAULT_LSQR_TOL,
            time_limit_secs: None,
            target_rel_rmse: None,
        }
    }
}

impl GnimcConfig {
    /// Defaults for noisy data: balancing on.
    pub fn noisy() -> Self {
        Self {
            balancing_enabled: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("stop_eps", self.stop_eps)?;
        positive("low_error_threshold", self.low_error_threshold)?;
        positive("lsqr_tol", self.lsqr_tol)?;
        if let Some(t) = self.time_limit_secs {
            positive("time_limit_secs", t)?;
        }
        if let Some(t) = self.target_rel_rmse {
            positive("target_rel_rmse", t)?;
        }
        if self.inner_iters_low_error == 0 || self.inner_iters_high_error == 0 {
            return Err(Error::Config("inner iteration caps must be >= 1".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::Config("max_outer_iters must be >= 1".into()));
        }
        Ok(())
    }

    /// Inner LSQR cap for the current relative observed residual.
    pub fn inner_cap(&self, rel_residual: f64) -> usize {
        if rel_residual <= self.low_error_threshold {
            self.inner_iters_low_error
        } else {
            self.inner_iters_high_error
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ObservedResidualSmall,
    EstimateChangeSmall,
    MaxIters,
    InnerFailure,
    /// A gradient step produced NaN or Inf; the last finite iterate is kept.
    NonFinite,
    TimeLimit,
    TargetReached,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ObservedResidualSmall => "observed_residual_small",
            Self::EstimateChangeSmall => "estimate_change_small",
            Self::MaxIters => "max_iters",
            Self::InnerFailure => "inner_failure",
            Self::NonFinite => "non_finite",
            Self::TimeLimit => "time_limit",
            Self::TargetReached => "target_reached",
        }
    }

    /// Whether the run stopped because something broke.
    pub fn is_failure(self) -> bool {
        matches!(self, Self::InnerFailure | Self::NonFinite)
    }
}

/// State after outer iteration `iter` (0 is the initialization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub rel_rmse: Option<f64>,
    pub rel_residual: f64,
    pub rel_change: Option<f64>,
    pub inner_iters: usize,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    /// `‖X_{t+1} − X*‖_F / ‖X_t − X*‖_F²`, one per step, when truth is known.
    pub empirical_gamma: Vec<f64>,
    pub failure: Option<String>,
}

impl SolveReport {
    /// Outer iterations performed.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn elapsed_secs(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.elapsed_secs)
    }

    pub fn final_rel_rmse(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.rel_rmse)
    }

    pub fn final_rel_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.rel_residual)
    }

    pub fn total_inner_iters(&self) -> usize {
        self.records.iter().map(|r| r.inner_iters).sum()
    }

    /// First record whose rel-RMSE is at or below `target`.
    pub fn first_reaching(&self, target: f64) -> Option<&IterRecord> {
        self.records
            .iter()
            .find(|r| r.rel_rmse.is_some_and(|e| e <= target))
    }

    /// The rel-RMSE trace, if truth was supplied.
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.rel_rmse).collect()
    }
}

/// Shared bookkeeping for every iterative solver: trace records, stopping
/// rules, time limit and the empirical `γ`.
pub(crate) struct Tracker<'a> {
    config: &'a GnimcConfig,
    meter: Option<&'a RecoveryMeter>,
    y: &'a [f64],
    y_norm: f64,
    start: Instant,
    prev_entries: Vec<f64>,
    prev_abs_err: Option<f64>,
    records: Vec<IterRecord>,
    gamma: Vec<f64>,
}

impl<'a> Tracker<'a> {
    pub(crate) fn new(
        problem: &'a Problem,
        config: &'a GnimcConfig,
        meter: Option<&'a RecoveryMeter>,
        init: &FactorPair,
        entries: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if config.target_rel_rmse.is_some() && meter.is_none() {
            return Err(Error::Config("target_rel_rmse needs a recovery meter".into()));
        }
        let y = problem.y();
        let mut tracker = Self {
            config,
            meter,
            y,
            y_norm: norm(y),
            start: Instant::now(),
            prev_entries: Vec::new(),
            prev_abs_err: None,
            records: Vec::new(),
            gamma: Vec::new(),
        };
        let rel_residual = tracker.rel_residual_of(&entries);
        let abs_err = meter.map(|m| m.abs_error(&init.product()));
        tracker.records.push(IterRecord {
            iter: 0,
            rel_rmse: abs_err.zip(meter).map(|(e, m)| e / m.truth_norm()),
            rel_residual,
            rel_change: None,
            inner_iters: 0,
            elapsed_secs: tracker.start.elapsed().as_secs_f64(),
        });
        tracker.prev_abs_err = abs_err;
        tracker.prev_entries = entries;
        Ok(tracker)
    }

    fn rel_residual_of(&self, entries: &[f64]) -> f64 {
        let r: f64 = entries
            .iter()
            .zip(self.y)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        if self.y_norm > 0.0 {
            r / self.y_norm
        } else {
            r
        }
    }

    pub(crate) fn rel_residual(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.rel_residual)
    }

    pub(crate) fn inner_cap(&self) -> usize {
        self.config.inner_cap(self.rel_residual())
    }

    pub(crate) fn iter(&self) -> usize {
        self.records.len() - 1
    }

    pub(crate) fn out_of_time(&self) -> bool {
        self.config
            .time_limit_secs
            .is_some_and(|limit| self.start.elapsed().as_secs_f64() >= limit)
    }

    /// Records the new iterate and reports whether a stopping rule fired.
    pub(crate) fn record(
        &mut self,
        iterate: &FactorPair,
        entries: Vec<f64>,
        inner_iters: usize,
    ) -> Option<Termination> {
        let rel_residual = self.rel_residual_of(&entries);
        let diff: f64 = entries
            .iter()
            .zip(&self.prev_entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let cur = norm(&entries);
        let rel_change = if cur > 0.0 { diff / cur } else { diff };
        let abs_err = self.meter.map(|m| m.abs_error(&iterate.product()));
        if let (Some(now), Some(before)) = (abs_err, self.prev_abs_err) {
            if before > 0.0 {
                self.gamma.push(now / (before * before));
            }
        }
        let rel_rmse = abs_err.zip(self.meter).map(|(e, m)| e / m.truth_norm());
        self.records.push(IterRecord {
            iter: self.records.len(),
            rel_rmse,
            rel_residual,
            rel_change: Some(rel_change),
            inner_iters,
            elapsed_secs: self.start.elapsed().as_secs_f64(),
        });
        self.prev_abs_err = abs_err;
        self.prev_entries = entries;

        let eps = self.config.stop_eps;
        if rel_residual <= eps {
            Some(Termination::ObservedResidualSmall)
        } else if rel_change <= eps {
            Some(Termination::EstimateChangeSmall)
        } else if self
            .config
            .target_rel_rmse
            .zip(rel_rmse)
            .is_some_and(|(t, e)| e <= t)
        {
            Some(Termination::TargetReached)
        } else {
            None
        }
    }

    pub(crate) fn finish(self, termination: Termination, failure: Option<String>) -> SolveReport {
        SolveReport {
            records: self.records,
            termination,
            empirical_gamma: self.gamma,
            failure,
        }
    }
}
