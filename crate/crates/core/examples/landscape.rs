//! Plain gradient descent from random starts. With enough samples the
//! factorized objective has no spurious local minima, so every start should
//! reach the truth.

use gnimc::baselines::gd_solve;
use gnimc::bench::literal_step;
use gnimc::gnimc::GnimcConfig;
use gnimc::problem::{generate, incoherence, observe, sample_omega, Dims, FactorPair, RecoveryMeter};
use gnimc::random::{gaussian_matrix, rng_from_seed};

fn main() -> gnimc::Result<()> {
    let dims = Dims {
        n1: 400,
        n2: 400,
        d1: 10,
        d2: 10,
        r: 3,
    };
    let kappa = 2.0;
    let truth = generate(dims, kappa, 21)?;
    let mu = incoherence(&truth.side.a)?.max(incoherence(&truth.side.b)?);
    let m = (mu * mu * 100.0 * 400f64.ln()).ceil() as usize;
    let problem = observe(&truth, sample_omega(400, 400, m, 22)?, 0.0, 23)?;
    let meter = RecoveryMeter::new(&truth, problem.side())?;
    let cfg = GnimcConfig {
        max_outer_iters: 20_000,
        target_rel_rmse: Some(1e-3),
        ..GnimcConfig::default()
    };
    let eta = literal_step(0.2, kappa, problem.p());
    let sd = 1.0 / (dims.d1.max(dims.d2) as f64).sqrt().sqrt();
    let mut reached = 0;
    for start in 0..10 {
        let mut rng = rng_from_seed(100 + start);
        let init = FactorPair {
            u: gaussian_matrix(dims.d1, dims.r, &mut rng).scaled(sd),
            v: gaussian_matrix(dims.d2, dims.r, &mut rng).scaled(sd),
        };
        let (_, report) = gd_solve(&problem, &init, &cfg, eta, Some(&meter))?;
        let err = report.final_rel_rmse().unwrap_or(f64::NAN);
        reached += usize::from(err <= 1e-3);
        println!("start {start}: rel-RMSE {err:.2e} after {} iterations", report.iterations());
    }
    println!("{reached}/10 starts reached the global minimum");
    Ok(())
}
