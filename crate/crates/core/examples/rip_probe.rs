//! Empirical restricted isometry constant of the IMC sensing operator as the
//! number of observed entries shrinks. Rank-10 test matrices of condition
//! number 1 and 100 give the same picture.

use gnimc::problem::{generate, incoherence, sample_omega, Dims};
use gnimc::sensing::{rip_probe, rip_probe_conditioned, SensingOp};

fn main() -> gnimc::Result<()> {
    let dims = Dims {
        n1: 400,
        n2: 400,
        d1: 10,
        d2: 10,
        r: 1,
    };
    let truth = generate(dims, 1.0, 5)?;
    let mu = incoherence(&truth.side.a)?.max(incoherence(&truth.side.b)?);
    let n = dims.n1.max(dims.n2) as f64;
    // Sample size at which δ ≤ 1/2 is guaranteed, with unit constant.
    let full = (8.0 / 0.25 * mu * mu * 100.0 * n.ln()).ceil() as usize;
    println!("mu = {mu:.2}, guarantee sample size {full}");
    for shrink in [1, 10, 100] {
        let m = (full / shrink).clamp(1, dims.n1 * dims.n2);
        let omega = sample_omega(dims.n1, dims.n2, m, 6)?;
        let op = SensingOp::new(&truth.side, &omega);
        let gauss = rip_probe(&op, 10, 100, 7)?;
        let flat = rip_probe_conditioned(&op, 10, 100, 1.0, 8)?;
        let steep = rip_probe_conditioned(&op, 10, 100, 100.0, 9)?;
        println!(
            "|Ω| = {m:>6}: δ̂ gaussian {:.3}, κ=1 {:.3}, κ=100 {:.3}",
            gauss.delta_hat, flat.delta_hat, steep.delta_hat
        );
    }
    Ok(())
}
