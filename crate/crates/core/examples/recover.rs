//! Exact recovery of a 1000 x 1000 rank-10 matrix from 450 entries.
//!
//! ```text
//! cargo run --release --example recover [seed]
//! ```

use gnimc::gnimc::{solve, GnimcConfig};
use gnimc::init::spectral_init;
use gnimc::problem::{generate, observe, sample_omega, Dims, RecoveryMeter};

fn main() -> gnimc::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let dims = Dims {
        n1: 1000,
        n2: 1000,
        d1: 20,
        d2: 20,
        r: 10,
    };
    let truth = generate(dims, 10.0, seed)?;
    // Oversampling ratio 1.5 over the (d1 + d2 - r) r degrees of freedom.
    let m = dims.samples_for_ratio(1.5);
    let omega = sample_omega(dims.n1, dims.n2, m, seed + 1)?;
    let problem = observe(&truth, omega, 0.0, seed + 2)?;
    println!("observed {m} of {} entries", dims.n1 * dims.n2);

    let meter = RecoveryMeter::new(&truth, problem.side())?;
    let init = spectral_init(&problem)?;
    let (est, report) = solve(&problem, &init, &GnimcConfig::default(), Some(&meter))?;

    println!("iter  rel-RMSE    residual   LSQR  time");
    for r in &report.records {
        println!(
            "{:>4}  {:.3e}  {:.3e}  {:>4}  {:.3}s",
            r.iter,
            r.rel_rmse.unwrap_or(f64::NAN),
            r.rel_residual,
            r.inner_iters,
            r.elapsed_secs
        );
    }
    println!(
        "stopped: {}, final rel-RMSE {:.2e}",
        report.termination.as_str(),
        meter.rel_error(&est.product())
    );
    Ok(())
}
