//! Iterations to reach rel-RMSE 1e-4 as the condition number of the target
//! grows: flat for GNIMC, roughly linear for gradient descent.

use gnimc::baselines::gd_solve;
use gnimc::bench::literal_step;
use gnimc::gnimc::{solve, GnimcConfig};
use gnimc::init::spectral_init;
use gnimc::problem::{generate, observe, sample_omega, Dims, RecoveryMeter};

fn main() -> gnimc::Result<()> {
    let dims = Dims {
        n1: 500,
        n2: 500,
        d1: 15,
        d2: 15,
        r: 5,
    };
    let cfg = GnimcConfig {
        max_outer_iters: 200_000,
        target_rel_rmse: Some(1e-4),
        ..GnimcConfig::default()
    };
    println!("kappa  gnimc  gd");
    for kappa in [1.0, 10.0, 100.0] {
        let truth = generate(dims, kappa, 3)?;
        let omega = sample_omega(500, 500, dims.samples_for_ratio(2.0), 4)?;
        let problem = observe(&truth, omega, 0.0, 5)?;
        let meter = RecoveryMeter::new(&truth, problem.side())?;
        let init = spectral_init(&problem)?;
        let (_, gn) = solve(&problem, &init, &cfg, Some(&meter))?;
        let eta = literal_step(0.3, kappa, problem.p());
        let (_, gd) = gd_solve(&problem, &init, &cfg, eta, Some(&meter))?;
        println!("{kappa:>5}  {:>5}  {:>6}", gn.iterations(), gd.iterations());
    }
    Ok(())
}
