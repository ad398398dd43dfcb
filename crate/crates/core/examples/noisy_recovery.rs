//! Recovery error against the noise level. The error tracks σ linearly, for
//! noise on the entries and for noise on the features.

use gnimc::gnimc::{solve, GnimcConfig};
use gnimc::init::spectral_init;
use gnimc::problem::{generate, observe_with, sample_omega, Dims, NoiseTarget, RecoveryMeter};

fn main() -> gnimc::Result<()> {
    let dims = Dims {
        n1: 600,
        n2: 600,
        d1: 15,
        d2: 15,
        r: 5,
    };
    let truth = generate(dims, 10.0, 11)?;
    let omega = sample_omega(600, 600, dims.samples_for_ratio(2.0), 12)?;
    for target in [NoiseTarget::Entries, NoiseTarget::Features] {
        println!("{target:?}");
        for sigma in [0.0, 1e-4, 1e-3, 1e-2, 1e-1] {
            let problem = observe_with(&truth, omega.clone(), sigma, target, 13)?;
            let meter = RecoveryMeter::new(&truth, problem.side())?;
            let init = spectral_init(&problem)?;
            let (_, report) = solve(&problem, &init, &GnimcConfig::noisy(), Some(&meter))?;
            println!(
                "  sigma {sigma:<7} rel-RMSE {:.2e} after {} iterations",
                report.final_rel_rmse().unwrap_or(f64::NAN),
                report.iterations()
            );
        }
    }
    Ok(())
}
