//! Runs a shipped experiment preset through the library and writes its CSVs,
//! the same as `gnimc-bench bench --preset <name>`.
//!
//! ```text
//! cargo run --release --example bench_preset -- fig1-left 5 out
//! ```

use std::path::PathBuf;

use gnimc::bench::{evaluate_acceptance, preset, run_experiment, RunOptions, PRESET_NAMES};

fn main() -> gnimc::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "fig1-left".into());
    if !PRESET_NAMES.contains(&name.as_str()) {
        eprintln!("unknown preset {name}; choose one of {}", PRESET_NAMES.join(", "));
        std::process::exit(1);
    }
    let mut cfg = preset(&name, false)?;
    // Three seeds by default keeps a demo run short; pass more to reproduce.
    cfg.num_seeds = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    if cfg.solvers.is_empty() {
        eprintln!("{name} is not a solver sweep; use the rank_estimation or rip_probe examples");
        std::process::exit(1);
    }
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    let result = run_experiment(
        &cfg,
        &RunOptions {
            workers: None,
            out_dir: Some(out.clone()),
        },
    )?;
    for s in &result.summary {
        println!(
            "setting {} κ={} ρ={:.2} {:<6} step {:?}: {}/{} reached 1e-4, median {:.3}s",
            s.setting, s.kappa, s.rho, s.solver, s.step, s.successes, s.runs, s.median_wall_time_secs
        );
    }
    if let Some(rows) = evaluate_acceptance(&cfg, &result) {
        for r in rows {
            println!("acceptance, setting {}: {}", r.setting, if r.passed { "met" } else { "missed" });
        }
    }
    println!("wrote {}", out.join(&cfg.name).display());
    Ok(())
}
