use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, InitSpec, SampleSize, SolverSpec};
use super::stats::median;
use crate::baselines::{altmin_solve, gd_solve, rgd_solve};
use crate::error::{Error, Result};
use crate::gnimc::{self, GnimcConfig, IterRecord, SolveReport};
use crate::init::{balanced_split, projected_gradient_init, spectral_init};
use crate::problem::{
    generate, generate_with_spectrum, incoherence, observe_with, sample_omega, FactorPair,
    GroundTruth, NoiseTarget, Problem, RecoveryMeter,
};
use crate::random::{derive_seed, gaussian_matrix, rng_from_seed};

/// Runtime knobs that do not change results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    /// Directory receiving `runs.csv`, `summary.csv` and traces.
    pub out_dir: Option<PathBuf>,
}

/// One point of the sweep: everything but the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub index: usize,
    pub kappa: f64,
    pub sample_size: SampleSize,
    pub noise_sigma: f64,
    pub noise_target: NoiseTarget,
}

/// The sweep in a fixed order: κ, then sample size, then σ, then target.
pub fn settings(config: &ExperimentConfig) -> Vec<Setting> {
    let kappas = match &config.spectrum {
        Some(s) => vec![s.iter().cloned().fold(0.0, f64::max) / s.iter().cloned().fold(f64::INFINITY, f64::min)],
        None => config.kappas.clone(),
    };
    let mut out = Vec::new();
    for &kappa in &kappas {
        for &sample_size in &config.sample_sizes {
            for &noise_sigma in &config.noise_sigmas {
                for &noise_target in &config.noise_targets {
                    out.push(Setting {
                        index: out.len(),
                        kappa,
                        sample_size,
                        noise_sigma,
                        noise_target,
                    });
                }
            }
        }
    }
    out
}

pub fn setting_seed(config: &ExperimentConfig, setting: &Setting) -> u64 {
    derive_seed(config.base_seed, setting.index as u64 + 1)
}

/// Seed of the `i`-th realization of a setting.
pub fn run_seed(config: &ExperimentConfig, setting: &Setting, i: usize) -> u64 {
    derive_seed(setting_seed(config, setting), i as u64)
}

/// A generated, observed and initialized problem.
pub struct Instance {
    pub truth: GroundTruth,
    pub problem: Problem,
    pub meter: RecoveryMeter,
    pub init: FactorPair,
    pub seed: u64,
}

/// Builds the instance of `setting` for `seed`: truth, Ω, observations and
/// initialization each draw from their own stream.
pub fn build_instance(config: &ExperimentConfig, setting: &Setting, seed: u64) -> Result<Instance> {
    let dims = config.effective_dims();
    let truth = match &config.spectrum {
        Some(s) => generate_with_spectrum(dims, s, derive_seed(seed, 0))?,
        None => generate(dims, setting.kappa, derive_seed(seed, 0))?,
    };
    let mu = if setting.sample_size.needs_mu() {
        incoherence(&truth.side.a)?.max(incoherence(&truth.side.b)?)
    } else {
        1.0
    };
    let m = setting.sample_size.count(&dims, mu);
    let omega = sample_omega(dims.n1, dims.n2, m, derive_seed(seed, 1))?;
    let problem = observe_with(
        &truth,
        omega,
        setting.noise_sigma,
        setting.noise_target,
        derive_seed(seed, 2),
    )?;
    let meter = RecoveryMeter::new(&truth, problem.side())?;
    let init = initialize(&problem, config.init, derive_seed(seed, 3))?;
    Ok(Instance {
        truth,
        problem,
        meter,
        init,
        seed,
    })
}

pub fn initialize(problem: &Problem, spec: InitSpec, seed: u64) -> Result<FactorPair> {
    match spec {
        InitSpec::Spectral => spectral_init(problem),
        InitSpec::ProjectedGradient { iters } => {
            balanced_split(&projected_gradient_init(problem, iters)?, problem.rank())
        }
        InitSpec::Random { variance } => {
            let op = problem.sensing();
            let var = variance.unwrap_or(1.0 / (op.d1().max(op.d2()) as f64).sqrt());
            let mut rng = rng_from_seed(seed);
            let r = problem.rank();
            let u = gaussian_matrix(op.d1(), r, &mut rng).scaled(var.sqrt());
            let v = gaussian_matrix(op.d2(), r, &mut rng).scaled(var.sqrt());
            FactorPair::new(u, v)
        }
    }
}

/// Literal gradient step for a normalized grid value.
pub fn literal_step(normalized: f64, kappa: f64, p: f64) -> f64 {
    normalized / (kappa * p)
}

/// Solver settings after applying the experiment-wide time limit and target.
pub fn effective_config(config: &ExperimentConfig, spec: &SolverSpec) -> GnimcConfig {
    let mut c = spec.config().clone();
    if c.time_limit_secs.is_none() {
        c.time_limit_secs = config.time_limit_secs;
    }
    if config.stop_at_target && c.target_rel_rmse.is_none() {
        c.target_rel_rmse = Some(config.target_rel_rmse);
    }
    c
}

/// Runs one solver on one instance. `step` is the normalized step size.
pub fn run_solver(
    config: &ExperimentConfig,
    spec: &SolverSpec,
    inst: &Instance,
    step: Option<f64>,
) -> Result<SolveReport> {
    let cfg = effective_config(config, spec);
    let (p, init, meter) = (&inst.problem, &inst.init, Some(&inst.meter));
    let eta = || {
        step.map(|s| literal_step(s, inst.truth.kappa, p.p()))
            .ok_or_else(|| Error::Config(format!("solver {} needs a step size", spec.id())))
    };
    let (_, report) = match spec {
        SolverSpec::Gnimc { .. } => gnimc::solve(p, init, &cfg, meter)?,
        SolverSpec::Altmin { .. } => altmin_solve(p, init, &cfg, meter)?,
        SolverSpec::Gd { .. } => gd_solve(p, init, &cfg, eta()?, meter)?,
        SolverSpec::Rgd { lambda, .. } => {
            rgd_solve(p, init, &cfg, eta()?, lambda * p.p(), meter)?
        }
    };
    Ok(report)
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub setting: usize,
    pub kappa: f64,
    pub num_samples: usize,
    pub rho: f64,
    pub noise_sigma: f64,
    pub noise_target: NoiseTarget,
    pub seed_index: usize,
    pub seed: u64,
    pub solver: String,
    /// `run`, or `pilot` for step-size tuning runs.
    pub role: String,
    pub step: Option<f64>,
    pub lambda: Option<f64>,
    pub final_rel_rmse: f64,
    pub final_rel_residual: f64,
    pub wall_time_secs: f64,
    pub iterations: usize,
    pub inner_iters: usize,
    pub iters_to_target: Option<usize>,
    pub time_to_target_secs: Option<f64>,
    pub termination: String,
    pub failure: Option<String>,
    pub trace: Option<String>,
}

impl RunRecord {
    pub fn is_failure(&self) -> bool {
        self.failure.is_some()
    }

    pub fn is_pilot(&self) -> bool {
        self.role == "pilot"
    }
}

/// Columns whose values depend on the clock.
pub const TIMING_COLUMNS: [&str; 5] = [
    "wall_time_secs",
    "time_to_target_secs",
    "elapsed_secs",
    "median_wall_time_secs",
    "median_time_to_target_secs",
];

/// One row of `summary.csv`: a (setting, solver) pair over all seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub setting: usize,
    pub kappa: f64,
    pub num_samples: usize,
    pub rho: f64,
    pub noise_sigma: f64,
    pub noise_target: NoiseTarget,
    pub solver: String,
    pub step: Option<f64>,
    pub runs: usize,
    pub successes: usize,
    pub failures: usize,
    pub median_rel_rmse: f64,
    pub median_wall_time_secs: f64,
    pub median_iterations: f64,
    /// `inf` when fewer than half the runs reached the target.
    pub median_iters_to_target: f64,
    pub median_time_to_target_secs: f64,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub name: String,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// `(trace path relative to the output directory, records)`.
    pub traces: Vec<(String, Vec<IterRecord>)>,
}

impl ExperimentResult {
    /// Non-pilot runs that ended in a failure.
    pub fn failed_runs(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !r.is_pilot() && r.is_failure())
            .count()
    }

    pub fn runs(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| !r.is_pilot())
    }
}

struct RunContext<'a> {
    config: &'a ExperimentConfig,
    hash: String,
    setting: &'a Setting,
    seed_index: usize,
    seed: u64,
    role: &'static str,
}

impl RunContext<'_> {
    fn trace_path(&self, solver: &str) -> Option<String> {
        let on = self.config.write_traces.unwrap_or(true) && self.role == "run";
        on.then(|| format!("{}/{}/{}.csv", self.config.name, solver, self.seed))
    }

    fn record(
        &self,
        spec: &SolverSpec,
        step: Option<f64>,
        num_samples: usize,
        outcome: std::result::Result<&SolveReport, &Error>,
    ) -> RunRecord {
        let dims = self.config.effective_dims();
        let lambda = match spec {
            SolverSpec::Rgd { lambda, .. } => Some(*lambda),
            _ => None,
        };
        let target = self.config.target_rel_rmse;
        let mut rec = RunRecord {
            config_hash: self.hash.clone(),
            setting: self.setting.index,
            kappa: self.setting.kappa,
            num_samples,
            rho: num_samples as f64 / dims.degrees_of_freedom() as f64,
            noise_sigma: self.setting.noise_sigma,
            noise_target: self.setting.noise_target,
            seed_index: self.seed_index,
            seed: self.seed,
            solver: spec.id().to_string(),
            role: self.role.to_string(),
            step,
            lambda,
            final_rel_rmse: f64::NAN,
            final_rel_residual: f64::NAN,
            wall_time_secs: 0.0,
            iterations: 0,
            inner_iters: 0,
            iters_to_target: None,
            time_to_target_secs: None,
            termination: "setup_error".into(),
            failure: None,
            trace: None,
        };
        match outcome {
            Ok(report) => {
                let hit = report.first_reaching(target);
                rec.final_rel_rmse = report.final_rel_rmse().unwrap_or(f64::NAN);
                rec.final_rel_residual = report.final_rel_residual();
                rec.wall_time_secs = report.elapsed_secs();
                rec.iterations = report.iterations();
                rec.inner_iters = report.total_inner_iters();
                rec.iters_to_target = hit.map(|r| r.iter);
                rec.time_to_target_secs = hit.map(|r| r.elapsed_secs);
                rec.termination = report.termination.as_str().into();
                rec.failure = report.failure.clone().or_else(|| {
                    report
                        .termination
                        .is_failure()
                        .then(|| report.termination.as_str().to_string())
                });
                rec.trace = self.trace_path(spec.id());
            }
            Err(e) => rec.failure = Some(e.to_string()),
        }
        rec
    }
}

type Traced = (RunRecord, Option<(String, Vec<IterRecord>)>);

fn run_one(
    ctx: &RunContext,
    spec: &SolverSpec,
    inst: std::result::Result<&Instance, &Error>,
    step: Option<f64>,
) -> Traced {
    let num_samples = inst.map_or(0, |i| i.problem.samples().len());
    let outcome = match inst {
        Ok(i) => run_solver(ctx.config, spec, i, step),
        Err(e) => return (ctx.record(spec, step, num_samples, Err(e)), None),
    };
    match outcome {
        Ok(report) => {
            let rec = ctx.record(spec, step, num_samples, Ok(&report));
            let trace = rec.trace.clone().map(|p| (p, report.records));
            (rec, trace)
        }
        Err(e) => (ctx.record(spec, step, num_samples, Err(&e)), None),
    }
}

/// Pilot tuning of a step grid on one extra realization: scans from the
/// largest step down and keeps the one reaching the target in the fewest
/// iterations (or, failing that, the lowest final error). Once a step has
/// reached the target, smaller ones only get that many iterations.
fn tune_step(
    config: &ExperimentConfig,
    hash: &str,
    setting: &Setting,
    spec: &SolverSpec,
    candidates: &[f64],
) -> (f64, Vec<RunRecord>) {
    let seed = derive_seed(setting_seed(config, setting), u64::MAX);
    let ctx = RunContext {
        config,
        hash: hash.to_string(),
        setting,
        seed_index: 0,
        seed,
        role: "pilot",
    };
    let inst = build_instance(config, setting, seed);
    let mut records = Vec::new();
    let mut best: Option<(usize, f64, f64)> = None; // (iters to target, final error, step)
    let mut spec = spec.clone();
    for &step in candidates {
        let (rec, _) = run_one(&ctx, &spec, inst.as_ref(), Some(step));
        let iters = rec.iters_to_target.unwrap_or(usize::MAX);
        let err = if rec.final_rel_rmse.is_nan() {
            f64::INFINITY
        } else {
            rec.final_rel_rmse
        };
        let better = match best {
            None => true,
            Some((bi, be, _)) => iters < bi || (iters == bi && err < be),
        };
        records.push(rec);
        if better {
            best = Some((iters, err, step));
        }
        if let Some((bi, _, _)) = best {
            if bi != usize::MAX {
                let cfg = spec.config_mut();
                cfg.max_outer_iters = cfg.max_outer_iters.min(bi);
            }
        }
    }
    (best.map_or(candidates[0], |b| b.2), records)
}

/// Runs every (setting, seed, solver) combination and writes CSV output
/// when `opts.out_dir` is set. Per-run errors are recorded, never raised.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    config.validate()?;
    if config.solvers.is_empty() {
        return Err(Error::Config("solvers must list at least one solver".into()));
    }
    with_pool(opts.workers, || {
        let hash = config.hash();
        let settings = settings(config);
        let mut records = Vec::new();

        // Step sizes, tuned per (setting, solver) before the main sweep.
        let mut steps = vec![vec![None; config.solvers.len()]; settings.len()];
        for setting in &settings {
            for (k, spec) in config.solvers.iter().enumerate() {
                let Some(grid) = spec.step() else { continue };
                let cands = grid.candidates();
                let step = if cands.len() == 1 {
                    cands[0]
                } else {
                    let (best, pilots) = tune_step(config, &hash, setting, spec, &cands);
                    records.extend(pilots);
                    best
                };
                steps[setting.index][k] = Some(step);
            }
        }

        let jobs: Vec<(&Setting, usize)> = settings
            .iter()
            .flat_map(|s| (0..config.num_seeds).map(move |i| (s, i)))
            .collect();
        let results: Vec<Vec<Traced>> = jobs
            .par_iter()
            .map(|&(setting, i)| {
                let seed = run_seed(config, setting, i);
                let ctx = RunContext {
                    config,
                    hash: hash.clone(),
                    setting,
                    seed_index: i,
                    seed,
                    role: "run",
                };
                let inst = build_instance(config, setting, seed);
                config
                    .solvers
                    .iter()
                    .enumerate()
                    .map(|(k, spec)| run_one(&ctx, spec, inst.as_ref(), steps[setting.index][k]))
                    .collect()
            })
            .collect();

        let mut traces = Vec::new();
        for (rec, trace) in results.into_iter().flatten() {
            records.push(rec);
            traces.extend(trace);
        }
        sort_records(&mut records);
        traces.sort_by(|a, b| a.0.cmp(&b.0));
        let summary = summarize(config, &settings, &records);
        let result = ExperimentResult {
            name: config.name.clone(),
            records,
            summary,
            traces,
        };
        if let Some(dir) = &opts.out_dir {
            write_outputs(dir, &result)?;
        }
        Ok(result)
    })
}

/// Runs `f` on a dedicated pool when a worker count is given.
pub fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

fn sort_records(records: &mut [RunRecord]) {
    let solver_rank = |s: &str| ["gnimc", "altmin", "gd", "rgd"].iter().position(|x| *x == s);
    records.sort_by(|a, b| {
        (a.role != "pilot", a.setting, a.seed_index, solver_rank(&a.solver))
            .cmp(&(b.role != "pilot", b.setting, b.seed_index, solver_rank(&b.solver)))
            .then(b.step.partial_cmp(&a.step).unwrap_or(std::cmp::Ordering::Equal))
    });
}

fn summarize(config: &ExperimentConfig, settings: &[Setting], records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for setting in settings {
        for spec in &config.solvers {
            let rows: Vec<&RunRecord> = records
                .iter()
                .filter(|r| !r.is_pilot() && r.setting == setting.index && r.solver == spec.id())
                .collect();
            let Some(first) = rows.first() else { continue };
            let col = |f: &dyn Fn(&RunRecord) -> f64| median(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            out.push(SummaryRow {
                setting: setting.index,
                kappa: setting.kappa,
                num_samples: first.num_samples,
                rho: first.rho,
                noise_sigma: setting.noise_sigma,
                noise_target: setting.noise_target,
                solver: spec.id().into(),
                step: first.step,
                runs: rows.len(),
                successes: rows
                    .iter()
                    .filter(|r| r.final_rel_rmse <= config.target_rel_rmse)
                    .count(),
                failures: rows.iter().filter(|r| r.is_failure()).count(),
                median_rel_rmse: col(&|r| r.final_rel_rmse),
                median_wall_time_secs: col(&|r| r.wall_time_secs),
                median_iterations: col(&|r| r.iterations as f64),
                median_iters_to_target: col(&|r| r.iters_to_target.map_or(f64::INFINITY, |v| v as f64)),
                median_time_to_target_secs: col(&|r| r.time_to_target_secs.unwrap_or(f64::INFINITY)),
            });
        }
    }
    out
}

/// Writes any serializable rows as a CSV file with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_outputs(dir: &Path, result: &ExperimentResult) -> Result<()> {
    let base = dir.join(&result.name);
    write_csv(&base.join("runs.csv"), &result.records)?;
    write_csv(&base.join("summary.csv"), &result.summary)?;
    for (path, trace) in &result.traces {
        write_csv(&dir.join(path), trace)?;
    }
    Ok(())
}

/// Acceptance verdict for one setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceRow {
    pub setting: usize,
    pub solver: String,
    pub successes: usize,
    pub runs: usize,
    pub passed: bool,
}

/// Applies `config.acceptance`; `None` when the config has no rule.
pub fn evaluate_acceptance(config: &ExperimentConfig, result: &ExperimentResult) -> Option<Vec<AcceptanceRow>> {
    let rule = config.acceptance.as_ref()?;
    let mut rows = Vec::new();
    for setting in settings(config) {
        let runs: Vec<&RunRecord> = result
            .runs()
            .filter(|r| r.setting == setting.index && r.solver == rule.solver)
            .collect();
        let successes = runs.iter().filter(|r| r.final_rel_rmse <= rule.target).count();
        let passed =
            !runs.is_empty() && successes as f64 >= rule.min_success_fraction * runs.len() as f64;
        rows.push(AcceptanceRow {
            setting: setting.index,
            solver: rule.solver.clone(),
            successes,
            runs: runs.len(),
            passed,
        });
    }
    Some(rows)
}
