//! Writing an observed instance to JSON and replaying it. The document holds
//! the generator seeds, Ω and the observed values, so the replay rebuilds the
//! side information and truth bit for bit.

use gnimc::gnimc::{solve, GnimcConfig};
use gnimc::init::spectral_init;
use gnimc::problem::{generate, observe, sample_omega, Dims, NoiseTarget, ProblemDocument, RecoveryMeter};

fn main() -> gnimc::Result<()> {
    let dims = Dims {
        n1: 300,
        n2: 200,
        d1: 10,
        d2: 8,
        r: 3,
    };
    let truth = generate(dims, 4.0, 9)?;
    let problem = observe(&truth, sample_omega(300, 200, 200, 10)?, 0.0, 11)?;
    let doc = ProblemDocument::new(&truth, &problem, NoiseTarget::Entries, 11);
    let path = std::env::temp_dir().join("gnimc-problem.json");
    std::fs::write(&path, serde_json::to_string(&doc)?)?;
    println!("wrote {}", path.display());

    let back: ProblemDocument = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let (truth, problem) = back.replay()?;
    let meter = RecoveryMeter::new(&truth, problem.side())?;
    let (_, report) = solve(&problem, &spectral_init(&problem)?, &GnimcConfig::default(), Some(&meter))?;
    println!(
        "replayed: {} entries, rel-RMSE {:.2e} after {} iterations",
        problem.samples().len(),
        report.final_rel_rmse().unwrap_or(f64::NAN),
        report.iterations()
    );
    Ok(())
}
