//! One Gauss-Newton step up close: the update has no component along the
//! kernel of the linearized operator, and the QR preconditioning keeps the
//! least-squares problem well conditioned whatever the scale of `U` and `V`.

use gnimc::gnimc::{gnimc_step_capped, preconditioned_condition_number, GnimcConfig};
use gnimc::linops::Matrix;
use gnimc::problem::{generate, observe, sample_omega, Dims, FactorPair};
use gnimc::random::{gaussian_matrix, rng_from_seed};

fn main() -> gnimc::Result<()> {
    let dims = Dims {
        n1: 200,
        n2: 200,
        d1: 8,
        d2: 8,
        r: 3,
    };
    let truth = generate(dims, 5.0, 1)?;
    let problem = observe(&truth, sample_omega(200, 200, 4000, 2)?, 0.0, 3)?;
    let mut rng = rng_from_seed(4);
    let it = FactorPair {
        u: gaussian_matrix(8, 3, &mut rng),
        v: gaussian_matrix(8, 3, &mut rng),
    };
    let step = gnimc_step_capped(&problem, &it, 1000, &GnimcConfig::default())?;
    println!("LSQR iterations: {}", step.inner_iters);

    // Inner products with the kernel directions (U E, -V Eᵀ).
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut e = Matrix::zeros(3, 3);
            e[(i, j)] = 1.0;
            let ip = step.delta.u.inner(&it.u.matmul(&e)) - step.delta.v.inner(&it.v.matmul_t(&e));
            worst = worst.max(ip.abs());
        }
    }
    println!("largest kernel component: {worst:.1e}");

    // Rescaling U up and V down leaves the product and κ_L unchanged.
    for c in [1.0, 100.0] {
        let skewed = FactorPair {
            u: it.u.scaled(c),
            v: it.v.scaled(1.0 / c),
        };
        println!(
            "scale {c:>5}: preconditioned condition number {:.3}",
            preconditioned_condition_number(&problem, &skewed)?
        );
    }
    Ok(())
}
