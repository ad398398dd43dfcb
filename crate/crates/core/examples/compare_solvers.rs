//! GNIMC against alternating minimization, GD and imbalance-regularized GD
//! on one instance, all from the same spectral initialization.
//!
//! The GD step size is the normalized value `0.25` divided by `κ p`; see the
//! `bench_preset` example for grid tuning.

use gnimc::baselines::{altmin_solve, gd_solve, rgd_solve};
use gnimc::bench::literal_step;
use gnimc::gnimc::{solve, GnimcConfig, SolveReport};
use gnimc::init::spectral_init;
use gnimc::problem::{generate, observe, sample_omega, Dims, RecoveryMeter};

fn show(name: &str, report: &SolveReport) {
    let to_target = report.first_reaching(1e-4);
    println!(
        "{name:<7} {:>6} iters  {:>8.3}s  final {:.2e}  to 1e-4: {}",
        report.iterations(),
        report.elapsed_secs(),
        report.final_rel_rmse().unwrap_or(f64::NAN),
        to_target.map_or("never".into(), |r| format!("{} iters, {:.3}s", r.iter, r.elapsed_secs)),
    );
}

fn main() -> gnimc::Result<()> {
    let dims = Dims {
        n1: 1000,
        n2: 1000,
        d1: 20,
        d2: 20,
        r: 10,
    };
    let kappa = 10.0;
    let truth = generate(dims, kappa, 7)?;
    let omega = sample_omega(1000, 1000, dims.samples_for_ratio(1.5), 8)?;
    let problem = observe(&truth, omega, 0.0, 9)?;
    let meter = RecoveryMeter::new(&truth, problem.side())?;
    let init = spectral_init(&problem)?;

    let cfg = GnimcConfig {
        time_limit_secs: Some(30.0),
        ..GnimcConfig::default()
    };
    let long = GnimcConfig {
        max_outer_iters: 100_000,
        ..cfg.clone()
    };
    let eta = literal_step(0.25, kappa, problem.p());

    show("gnimc", &solve(&problem, &init, &cfg, Some(&meter))?.1);
    show("altmin", &altmin_solve(&problem, &init, &cfg, Some(&meter))?.1);
    show("gd", &gd_solve(&problem, &init, &long, eta, Some(&meter))?.1);
    show("rgd", &rgd_solve(&problem, &init, &long, eta, problem.p(), Some(&meter))?.1);
    Ok(())
}
