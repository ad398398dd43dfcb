use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gnimc::bench::{self, ExperimentConfig, RunOptions, SampleSize};
use gnimc::gnimc::GnimcConfig;
use gnimc::problem::ProblemDocument;
use gnimc::Error;

/// Benchmarks for inductive matrix completion.
///
/// Exit codes: 0 success, 1 config error, 2 a run failed, 3 acceptance
/// threshold missed.
#[derive(Parser)]
#[command(name = "gnimc-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one observed instance and write it as JSON.
    Generate(Common),
    /// Solve an instance written by `generate`.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Problem JSON from `generate`.
        #[arg(long)]
        problem: PathBuf,
        /// gnimc, altmin, gd or rgd.
        #[arg(long, default_value = "gnimc")]
        solver: String,
        /// Normalized step size for gd and rgd.
        #[arg(long, default_value_t = 0.2)]
        step: f64,
    },
    /// Run a solver sweep (or whichever experiment the config describes).
    Bench(Common),
    /// Rank estimation experiment (default preset fig4-rank).
    Rank(Common),
    /// Empirical RIP probe (default preset rip-probe).
    Rip(Common),
    /// Gradient descent from random starts (default preset landscape-gd).
    Landscape(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config JSON (for `solve`: a solver config JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the number of seeds.
    #[arg(long)]
    num_seeds: Option<usize>,
    /// Run fig2-right at its full row count.
    #[arg(long)]
    full_scale: bool,
}

enum Failure {
    Config(String),
    Run(String),
    Acceptance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => Self::Config(e.to_string()),
            _ => Self::Run(e.to_string()),
        }
    }
}

impl Common {
    fn load(&self, default_preset: Option<&str>) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match (&self.config, self.preset.as_deref().or(default_preset)) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            (None, Some(name)) => bench::preset(name, self.full_scale)?,
            (None, None) => {
                return Err(Failure::Config(format!(
                    "pass --config <path> or --preset <name> ({})",
                    bench::PRESET_NAMES.join(", ")
                )))
            }
        };
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(n) = self.num_seeds {
            cfg.num_seeds = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self, cfg: &ExperimentConfig) -> RunOptions {
        RunOptions {
            workers: self.workers,
            out_dir: self
                .out
                .clone()
                .or_else(|| cfg.output.clone())
                .or_else(|| Some(PathBuf::from("out"))),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Run(m)) => {
            eprintln!("run failed: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Acceptance(m)) => {
            eprintln!("acceptance missed: {m}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Generate(c) => generate(&c),
        Command::Solve {
            common,
            problem,
            solver,
            step,
        } => solve(&common, &problem, &solver, step),
        Command::Bench(c) => {
            let cfg = c.load(None)?;
            let opts = c.options(&cfg);
            if cfg.rank.is_some() {
                rank(&cfg, &opts)
            } else if cfg.rip.is_some() {
                rip(&cfg, &opts)
            } else if cfg.noise_sigmas.len() > 1 && cfg.noise_sigmas.contains(&0.0) {
                let sweep = bench::noise_sweep(&cfg, &opts)?;
                for row in sweep.rows.iter().filter(|r| r.kind == "fit") {
                    println!(
                        "{:?} {}: log-log slope {:?}",
                        row.noise_target, row.solver, row.loglog_slope
                    );
                }
                report(&cfg, &opts, &sweep.result)
            } else {
                let result = bench::run_experiment(&cfg, &opts)?;
                report(&cfg, &opts, &result)
            }
        }
        Command::Rank(c) => {
            let cfg = c.load(Some("fig4-rank"))?;
            rank(&cfg, &c.options(&cfg))
        }
        Command::Rip(c) => {
            let cfg = c.load(Some("rip-probe"))?;
            rip(&cfg, &c.options(&cfg))
        }
        Command::Landscape(c) => {
            let cfg = c.load(Some("landscape-gd"))?;
            let opts = c.options(&cfg);
            let result = bench::landscape(&cfg, &opts)?;
            report(&cfg, &opts, &result)
        }
    }
}

fn out_note(opts: &RunOptions, cfg: &ExperimentConfig) {
    if let Some(dir) = &opts.out_dir {
        println!("wrote {}", dir.join(&cfg.name).display());
    }
}

fn report(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    result: &bench::ExperimentResult,
) -> Result<(), Failure> {
    println!("setting solver runs successes median_rel_rmse median_time_s median_iters");
    for s in &result.summary {
        println!(
            "{} {} {} {} {:.3e} {:.3} {}",
            s.setting,
            s.solver,
            s.runs,
            s.successes,
            s.median_rel_rmse,
            s.median_wall_time_secs,
            s.median_iterations
        );
    }
    out_note(opts, cfg);
    let failed = result.failed_runs();
    if failed > 0 {
        return Err(Failure::Run(format!("{failed} runs ended in failure")));
    }
    if let Some(rows) = bench::evaluate_acceptance(cfg, result) {
        let missed: Vec<String> = rows
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("setting {}: {}/{}", r.setting, r.successes, r.runs))
            .collect();
        if !missed.is_empty() {
            return Err(Failure::Acceptance(missed.join("; ")));
        }
    }
    Ok(())
}

fn rank(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(), Failure> {
    let exp = bench::rank_experiment(cfg, opts)?;
    let spec = cfg.rank.as_ref().expect("validated by rank_experiment");
    let mut missed = Vec::new();
    for d in &spec.d_choices {
        let label = d.label();
        let correct = exp.correct(&label);
        let total = exp.estimates.iter().filter(|r| r.d_choice == label).count();
        println!("D = {label}: r_hat = {} on {correct}/{total} seeds", spec.expected_rank);
        if let Some(a) = &cfg.acceptance {
            if (correct as f64) < a.min_success_fraction * total as f64 {
                missed.push(format!("D = {label}: {correct}/{total}"));
            }
        }
    }
    out_note(opts, cfg);
    if missed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Acceptance(missed.join("; ")))
    }
}

fn rip(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(), Failure> {
    let exp = bench::rip_experiment(cfg, opts)?;
    let mut missed = Vec::new();
    for s in &exp.summary {
        println!(
            "{} [{}] |Ω|≈{} q50 {:.3} q95 {:.3} within {:.2}",
            s.sample_size, s.test_matrix, s.median_num_samples, s.median, s.q95, s.fraction_within
        );
        // Acceptance applies at or above the guarantee's sample size.
        let at_rate = matches!(
            cfg.sample_sizes[s.setting % cfg.sample_sizes.len()],
            SampleSize::RipRate { shrink, .. } if shrink <= 1.0
        );
        if let Some(a) = &cfg.acceptance {
            if at_rate && s.fraction_within < a.min_success_fraction {
                missed.push(format!("{} [{}]", s.sample_size, s.test_matrix));
            }
        }
    }
    out_note(opts, cfg);
    if missed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Acceptance(missed.join("; ")))
    }
}

fn generate(c: &Common) -> Result<(), Failure> {
    let cfg = c.load(Some("fig1-left"))?;
    let setting = bench::settings(&cfg).remove(0);
    let seed = bench::run_seed(&cfg, &setting, 0);
    let inst = bench::build_instance(&cfg, &setting, seed)?;
    let doc = ProblemDocument::new(
        &inst.truth,
        &inst.problem,
        setting.noise_target,
        gnimc::random::derive_seed(seed, 2),
    );
    let text = serde_json::to_string(&doc).map_err(Error::from)?;
    match &c.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            let path = dir.join(format!("{}-{seed}.json", cfg.name));
            std::fs::write(&path, text).map_err(Error::from)?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn solve(c: &Common, problem: &Path, solver: &str, step: f64) -> Result<(), Failure> {
    let text = std::fs::read_to_string(problem)
        .map_err(|e| Failure::Config(format!("{}: {e}", problem.display())))?;
    let doc: ProblemDocument = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", problem.display())))?;
    let config: GnimcConfig = match &c.config {
        Some(path) => {
            let t = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&t).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => GnimcConfig::default(),
    };
    let (truth, p) = doc.replay()?;
    let meter = gnimc::problem::RecoveryMeter::new(&truth, p.side())?;
    let init = gnimc::init::spectral_init(&p)?;
    let eta = bench::literal_step(step, truth.kappa, p.p());
    let (_, rep) = match solver {
        "gnimc" => gnimc::gnimc::solve(&p, &init, &config, Some(&meter))?,
        "altmin" => gnimc::baselines::altmin_solve(&p, &init, &config, Some(&meter))?,
        "gd" => gnimc::baselines::gd_solve(&p, &init, &config, eta, Some(&meter))?,
        "rgd" => gnimc::baselines::rgd_solve(&p, &init, &config, eta, p.p(), Some(&meter))?,
        other => return Err(Failure::Config(format!("unknown solver {other:?}"))),
    };
    println!(
        "{solver}: {} iterations, rel-RMSE {:.3e}, {:.3}s, {}",
        rep.iterations(),
        rep.final_rel_rmse().unwrap_or(f64::NAN),
        rep.elapsed_secs(),
        rep.termination.as_str()
    );
    if let Some(dir) = &c.out {
        let path = dir.join(format!("{solver}-{}.csv", doc.seed));
        bench::write_csv(&path, &rep.records)?;
        println!("wrote {}", path.display());
    }
    if rep.termination.is_failure() {
        return Err(Failure::Run(rep.failure.unwrap_or_default()));
    }
    Ok(())
}
