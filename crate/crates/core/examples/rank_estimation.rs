//! Estimating the rank of an approximately rank-5 matrix from 1% of its
//! entries, with and without the robustness term `D`.

use gnimc::problem::{generate_with_spectrum, observe, sample_omega, Dims};
use gnimc::rankest::{estimate_rank, true_gaps};

fn main() -> gnimc::Result<()> {
    let spectrum = [5.0, 4.0, 3.0, 2.0, 1.0, 0.2, 0.1, 0.08, 0.06, 0.03];
    let dims = Dims {
        n1: 3000,
        n2: 1000,
        d1: 30,
        d2: 20,
        r: spectrum.len(),
    };
    let truth = generate_with_spectrum(dims, &spectrum, 1)?;
    let omega = sample_omega(dims.n1, dims.n2, 30_000, 2)?;
    let problem = observe(&truth, omega, 0.0, 3)?;

    for d in [Some(0.0), None] {
        let est = estimate_rank(problem.side(), problem.samples(), problem.y(), d)?;
        let exact = true_gaps(&spectrum, est.d_const);
        println!("D = {:.4}: r_hat = {}", est.d_const, est.r_hat);
        for (i, g) in est.gaps.iter().enumerate().take(spectrum.len() - 1) {
            println!("  ĝ_{:<2} {g:>7.3}   ĝ/g {:.3}", i + 1, g / exact[i]);
        }
    }
    Ok(())
}
