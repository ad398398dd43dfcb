//! Experiments beyond the plain solver sweep: noise scaling, rank
//! estimation, RIP probing, the random-init landscape check and per-step
//! cost timing.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, InitSpec, SolverSpec, TestMatrix};
use super::run::{
    build_instance, run_experiment, run_seed, settings, with_pool, write_csv, ExperimentResult,
    RunOptions, Setting,
};
use super::stats::{loglog_slope, median, quantile};
use crate::baselines::gd_step;
use crate::error::{Error, Result};
use crate::gnimc::{self, gnimc_step, gnimc_step_capped, GnimcConfig};
use crate::problem::{
    generate, generate_with_spectrum, incoherence, observe_with, sample_omega, FactorPair,
    GroundTruth, NoiseTarget, Problem,
};
use crate::random::derive_seed;
use crate::rankest::{estimate_rank, gaps};
use crate::sensing::{rip_probe, rip_probe_conditioned, SensingOp};

/// One point (or the fitted slope) of a noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub noise_target: NoiseTarget,
    pub solver: String,
    /// `point` rows carry a σ and its median error; `fit` rows the slope.
    pub kind: &'static str,
    pub noise_sigma: Option<f64>,
    pub median_rel_rmse: Option<f64>,
    pub loglog_slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NoiseSweep {
    pub result: ExperimentResult,
    pub rows: Vec<NoiseRow>,
}

impl NoiseSweep {
    pub fn slope(&self, target: NoiseTarget, solver: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.kind == "fit" && r.noise_target == target && r.solver == solver)
            .and_then(|r| r.loglog_slope)
    }

    pub fn median_at(&self, target: NoiseTarget, solver: &str, sigma: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.kind == "point"
                    && r.noise_target == target
                    && r.solver == solver
                    && r.noise_sigma == Some(sigma)
            })
            .and_then(|r| r.median_rel_rmse)
    }
}

/// Final rel-RMSE against σ, with a log-log slope over the positive σ.
/// The sigma list must include the noiseless control `0`.
pub fn noise_sweep(config: &ExperimentConfig, opts: &RunOptions) -> Result<NoiseSweep> {
    if !config.noise_sigmas.contains(&0.0) {
        return Err(Error::Config(
            "noise sweep needs the noiseless control: add 0 to noise_sigmas".into(),
        ));
    }
    let result = run_experiment(config, opts)?;
    let mut rows = Vec::new();
    for &target in &config.noise_targets {
        for spec in &config.solvers {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for &sigma in &config.noise_sigmas {
                let errs: Vec<f64> = result
                    .summary
                    .iter()
                    .filter(|s| {
                        s.noise_target == target && s.solver == spec.id() && s.noise_sigma == sigma
                    })
                    .map(|s| s.median_rel_rmse)
                    .collect();
                let m = median(&errs);
                rows.push(NoiseRow {
                    noise_target: target,
                    solver: spec.id().into(),
                    kind: "point",
                    noise_sigma: Some(sigma),
                    median_rel_rmse: Some(m),
                    loglog_slope: None,
                });
                if sigma > 0.0 {
                    xs.push(sigma);
                    ys.push(m);
                }
            }
            rows.push(NoiseRow {
                noise_target: target,
                solver: spec.id().into(),
                kind: "fit",
                noise_sigma: None,
                median_rel_rmse: None,
                loglog_slope: loglog_slope(&xs, &ys),
            });
        }
    }
    if let Some(dir) = &opts.out_dir {
        write_csv(&dir.join(&config.name).join("noise.csv"), &rows)?;
    }
    Ok(NoiseSweep { result, rows })
}

/// Truth and observations without any solver initialization.
fn observed(config: &ExperimentConfig, setting: &Setting, seed: u64) -> Result<(GroundTruth, Problem)> {
    let dims = config.effective_dims();
    let truth = match &config.spectrum {
        Some(s) => generate_with_spectrum(dims, s, derive_seed(seed, 0))?,
        None => generate(dims, setting.kappa, derive_seed(seed, 0))?,
    };
    let mu = mu_of(&truth)?;
    let omega = sample_omega(dims.n1, dims.n2, setting.sample_size.count(&dims, mu), derive_seed(seed, 1))?;
    let problem = observe_with(
        &truth,
        omega,
        setting.noise_sigma,
        setting.noise_target,
        derive_seed(seed, 2),
    )?;
    Ok((truth, problem))
}

fn mu_of(truth: &GroundTruth) -> Result<f64> {
    Ok(incoherence(&truth.side.a)?.max(incoherence(&truth.side.b)?))
}

/// Estimated against true gap at one index, for one seed and `D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub setting: usize,
    pub seed_index: usize,
    pub seed: u64,
    pub d_choice: String,
    pub d_const: f64,
    pub index: usize,
    pub sigma_hat: f64,
    pub sigma_true: f64,
    pub g_hat: f64,
    pub g_true: f64,
    pub ratio: f64,
}

/// The estimate for one seed and `D`, with the guarantee's diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub setting: usize,
    pub seed_index: usize,
    pub seed: u64,
    pub d_choice: String,
    pub d_const: f64,
    pub num_samples: usize,
    pub r_hat: usize,
    pub expected_rank: usize,
    pub correct: bool,
    /// `min_i {σ_{i+1} + D σ₁ √i}` of the true spectrum.
    pub delta: f64,
    /// `‖X̂ − X*‖_F` measured in the feature coordinates.
    pub estimation_error: f64,
    /// `8 μ² d1 d2 log n ‖X*‖_F² / δ²`, the sample size the guarantee asks
    /// for with unit constant.
    pub required_samples: f64,
}

#[derive(Debug, Clone)]
pub struct RankExperiment {
    pub gaps: Vec<GapRow>,
    pub estimates: Vec<RankRow>,
}

impl RankExperiment {
    /// Seeds whose estimate is correct, for the given `D` label.
    pub fn correct(&self, d_choice: &str) -> usize {
        self.estimates
            .iter()
            .filter(|r| r.d_choice == d_choice && r.correct)
            .count()
    }
}

/// Compares estimated and true spectral gaps on every seed and `D` choice.
pub fn rank_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RankExperiment> {
    config.validate()?;
    let spec = config
        .rank
        .as_ref()
        .ok_or_else(|| Error::Config("rank experiment needs a `rank` section".into()))?;
    let dims = config.effective_dims();
    let kmax = dims.d1.min(dims.d2);
    let jobs: Vec<(Setting, usize)> = settings(config)
        .into_iter()
        .flat_map(|s| (0..config.num_seeds).map(move |i| (s.clone(), i)))
        .collect();
    let per_seed = with_pool(opts.workers, || {
        jobs.par_iter()
            .map(|(setting, i)| -> Result<(Vec<GapRow>, Vec<RankRow>)> {
                let seed = run_seed(config, setting, *i);
                let (truth, problem) = observed(config, setting, seed)?;
                let mut sigma_true = truth.spectrum.clone();
                sigma_true.resize(kmax, 0.0);
                let op = SensingOp::new(problem.side(), problem.samples());
                let mut xhat = op.adjoint_unscaled(problem.y());
                xhat.scale_mut(1.0 / problem.p());
                let estimation_error = xhat.sub(&truth.m_star).frobenius_norm();
                let truth_norm = truth.m_star.frobenius_norm();
                let log_n = (dims.n1.max(dims.n2) as f64).ln();
                let mu = mu_of(&truth)?;
                let (mut g_rows, mut r_rows) = (Vec::new(), Vec::new());
                for choice in &spec.d_choices {
                    let est = estimate_rank(problem.side(), problem.samples(), problem.y(), choice.resolve())?;
                    let g_true = gaps(&sigma_true, est.d_const);
                    for (k, (gh, gt)) in est.gaps.iter().zip(&g_true).enumerate() {
                        g_rows.push(GapRow {
                            setting: setting.index,
                            seed_index: *i,
                            seed,
                            d_choice: choice.label(),
                            d_const: est.d_const,
                            index: k + 1,
                            sigma_hat: est.sigma_hat[k],
                            sigma_true: sigma_true[k],
                            g_hat: *gh,
                            g_true: *gt,
                            ratio: gh / gt,
                        });
                    }
                    let delta = (1..kmax)
                        .map(|i| sigma_true[i] + est.d_const * sigma_true[0] * (i as f64).sqrt())
                        .fold(f64::INFINITY, f64::min);
                    r_rows.push(RankRow {
                        setting: setting.index,
                        seed_index: *i,
                        seed,
                        d_choice: choice.label(),
                        d_const: est.d_const,
                        num_samples: problem.samples().len(),
                        r_hat: est.r_hat,
                        expected_rank: spec.expected_rank,
                        correct: est.r_hat == spec.expected_rank,
                        delta,
                        estimation_error,
                        required_samples: 8.0 * mu * mu * (dims.d1 * dims.d2) as f64 * log_n
                            * truth_norm
                            * truth_norm
                            / (delta * delta),
                    });
                }
                Ok((g_rows, r_rows))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (mut gap_rows, mut estimates) = (Vec::new(), Vec::new());
    for (g, r) in per_seed {
        gap_rows.extend(g);
        estimates.extend(r);
    }
    if let Some(dir) = &opts.out_dir {
        let base = dir.join(&config.name);
        write_csv(&base.join("gaps.csv"), &gap_rows)?;
        write_csv(&base.join("rank.csv"), &estimates)?;
    }
    Ok(RankExperiment {
        gaps: gap_rows,
        estimates,
    })
}

/// `δ̂` of one probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipRow {
    pub setting: usize,
    pub sample_size: String,
    pub num_samples: usize,
    pub mu: f64,
    pub seed_index: usize,
    pub seed: u64,
    pub test_matrix: String,
    pub delta_hat: f64,
}

/// Quantiles of `δ̂` over seeds for one (setting, test matrix).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipSummary {
    pub setting: usize,
    pub sample_size: String,
    pub median_num_samples: f64,
    pub test_matrix: String,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    /// Fraction of seeds with `δ̂ ≤ delta`.
    pub fraction_within: f64,
}

#[derive(Debug, Clone)]
pub struct RipExperiment {
    pub rows: Vec<RipRow>,
    pub summary: Vec<RipSummary>,
}

/// Runs the empirical RIP probe over the sample-size grid and every test
/// matrix family.
pub fn rip_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RipExperiment> {
    config.validate()?;
    let spec = config
        .rip
        .as_ref()
        .ok_or_else(|| Error::Config("rip experiment needs a `rip` section".into()))?;
    let dims = config.effective_dims();
    let jobs: Vec<(Setting, usize)> = settings(config)
        .into_iter()
        .filter(|s| s.noise_sigma == config.noise_sigmas[0] && s.noise_target == config.noise_targets[0])
        .flat_map(|s| (0..config.num_seeds).map(move |i| (s.clone(), i)))
        .collect();
    let per_seed = with_pool(opts.workers, || {
        jobs.par_iter()
            .map(|(setting, i)| -> Result<Vec<RipRow>> {
                let seed = run_seed(config, setting, *i);
                let truth = generate(
                    crate::problem::Dims { r: 1, ..dims },
                    1.0,
                    derive_seed(seed, 0),
                )?;
                let mu = mu_of(&truth)?;
                let m = setting.sample_size.count(&dims, mu);
                let omega = sample_omega(dims.n1, dims.n2, m, derive_seed(seed, 1))?;
                let op = SensingOp::new(&truth.side, &omega);
                spec.test_matrices
                    .iter()
                    .enumerate()
                    .map(|(k, tm)| {
                        let probe_seed = derive_seed(seed, 4 + k as u64);
                        let report = match *tm {
                            TestMatrix::Gaussian => rip_probe(&op, spec.rank_tested, spec.trials, probe_seed)?,
                            TestMatrix::Conditioned(kappa) => rip_probe_conditioned(
                                &op,
                                spec.rank_tested,
                                spec.trials,
                                kappa,
                                probe_seed,
                            )?,
                        };
                        Ok(RipRow {
                            setting: setting.index,
                            sample_size: setting.sample_size.label(),
                            num_samples: m,
                            mu,
                            seed_index: *i,
                            seed,
                            test_matrix: tm.label(),
                            delta_hat: report.delta_hat,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<RipRow> = per_seed.into_iter().flatten().collect();
    let mut summary = Vec::new();
    let mut keys: Vec<(usize, String)> = rows.iter().map(|r| (r.setting, r.test_matrix.clone())).collect();
    keys.dedup();
    keys.sort();
    keys.dedup();
    for (setting, tm) in keys {
        let sel: Vec<&RipRow> = rows
            .iter()
            .filter(|r| r.setting == setting && r.test_matrix == tm)
            .collect();
        let d: Vec<f64> = sel.iter().map(|r| r.delta_hat).collect();
        let counts: Vec<f64> = sel.iter().map(|r| r.num_samples as f64).collect();
        summary.push(RipSummary {
            setting,
            sample_size: sel[0].sample_size.clone(),
            median_num_samples: median(&counts),
            test_matrix: tm,
            q05: quantile(&d, 0.05),
            q25: quantile(&d, 0.25),
            median: median(&d),
            q75: quantile(&d, 0.75),
            q95: quantile(&d, 0.95),
            fraction_within: d.iter().filter(|v| **v <= spec.delta).count() as f64 / d.len() as f64,
        });
    }
    if let Some(dir) = &opts.out_dir {
        let base = dir.join(&config.name);
        write_csv(&base.join("rip.csv"), &rows)?;
        write_csv(&base.join("rip_summary.csv"), &summary)?;
    }
    Ok(RipExperiment { rows, summary })
}

/// Gradient descent from random initializations. The config must use a
/// random init and only gradient solvers.
pub fn landscape(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    if !matches!(config.init, InitSpec::Random { .. }) {
        return Err(Error::Config("landscape runs need \"init\": {\"random\": {}}".into()));
    }
    if config
        .solvers
        .iter()
        .any(|s| !matches!(s, SolverSpec::Gd { .. } | SolverSpec::Rgd { .. }))
    {
        return Err(Error::Config("landscape runs accept only gd and rgd solvers".into()));
    }
    run_experiment(config, opts)
}

/// Condition number of the preconditioned least-squares operator at the
/// initialization and after every GNIMC step.
pub fn conditioning_trace(
    problem: &Problem,
    init: &FactorPair,
    config: &GnimcConfig,
) -> Result<Vec<f64>> {
    let mut iterate = init.clone();
    let mut out = vec![gnimc::preconditioned_condition_number(problem, &iterate)?];
    for _ in 0..config.max_outer_iters {
        let (next, _) = gnimc_step(problem, &iterate, config)?;
        iterate = next;
        let x = problem.sensing().sample_factored(&iterate.u, &iterate.v);
        let resid = x
            .iter()
            .zip(problem.y())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / crate::linops::norm(problem.y());
        out.push(gnimc::preconditioned_condition_number(problem, &iterate)?);
        if resid <= config.stop_eps {
            break;
        }
    }
    Ok(out)
}

/// Median wall time of a single GNIMC step and a single GD step from the
/// same iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostParity {
    pub reps: usize,
    pub gnimc_step_secs: f64,
    pub gnimc_inner_iters: usize,
    pub gd_step_secs: f64,
    pub ratio: f64,
}

/// Times `reps` GNIMC steps (inner cap from the schedule, or `inner_cap`)
/// against `reps` GD steps at `iterate`.
pub fn cost_parity(
    problem: &Problem,
    iterate: &FactorPair,
    config: &GnimcConfig,
    inner_cap: Option<usize>,
    reps: usize,
) -> Result<CostParity> {
    let reps = reps.max(1);
    let mut gn = Vec::with_capacity(reps);
    let mut inner = 0;
    for _ in 0..reps {
        let t = Instant::now();
        inner = match inner_cap {
            Some(cap) => gnimc_step_capped(problem, iterate, cap, config)?.inner_iters,
            None => gnimc_step(problem, iterate, config)?.1,
        };
        gn.push(t.elapsed().as_secs_f64());
    }
    let mut gd = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        std::hint::black_box(gd_step(problem, iterate, 1e-3)?);
        gd.push(t.elapsed().as_secs_f64());
    }
    let (a, b) = (median(&gn), median(&gd));
    Ok(CostParity {
        reps,
        gnimc_step_secs: a,
        gnimc_inner_iters: inner,
        gd_step_secs: b,
        ratio: a / b,
    })
}

/// [`cost_parity`] on seed 0 of the first setting, from its shared init.
pub fn cost_parity_experiment(config: &ExperimentConfig, reps: usize, out: Option<&Path>) -> Result<CostParity> {
    let setting = settings(config)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("no settings".into()))?;
    let inst = build_instance(config, &setting, run_seed(config, &setting, 0))?;
    let cfg = config
        .solvers
        .iter()
        .find(|s| s.id() == "gnimc")
        .map(|s| s.config().clone())
        .unwrap_or_default();
    let report = cost_parity(&inst.problem, &inst.init, &cfg, None, reps)?;
    if let Some(dir) = out {
        write_csv(&dir.join(&config.name).join("cost_parity.csv"), std::slice::from_ref(&report))?;
    }
    Ok(report)
}
