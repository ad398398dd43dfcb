//! Shipped experiment presets, one per reproduced figure or table.

use super::config::{
    Acceptance, DChoice, ExperimentConfig, InitSpec, RankSpec, RipSpec, SampleSize, SolverSpec,
    StepSpec, TestMatrix,
};
use crate::error::{Error, Result};
use crate::gnimc::GnimcConfig;
use crate::problem::{Dims, NoiseTarget};

pub const PRESET_NAMES: [&str; 9] = [
    "fig1-left",
    "fig1-right",
    "fig2-left",
    "fig2-right",
    "fig3-noise",
    "fig4-rank",
    "table2-rho-sweep",
    "rip-probe",
    "landscape-gd",
];

/// Rank-10 spectrum with a dominant rank-5 part.
pub const FIG4_SPECTRUM: [f64; 10] = [5.0, 4.0, 3.0, 2.0, 1.0, 0.2, 0.1, 0.08, 0.06, 0.03];

const DESK: Dims = Dims {
    n1: 1000,
    n2: 1000,
    d1: 20,
    d2: 20,
    r: 10,
};

fn rho_grid() -> Vec<SampleSize> {
    (11..=20).map(|k| SampleSize::Rho(k as f64 / 10.0)).collect()
}

fn gnimc() -> SolverSpec {
    SolverSpec::gnimc()
}

fn altmin(max_iters: usize) -> SolverSpec {
    SolverSpec::Altmin {
        config: GnimcConfig {
            max_outer_iters: max_iters,
            ..GnimcConfig::default()
        },
    }
}

fn gd(max_iters: usize) -> SolverSpec {
    SolverSpec::Gd {
        config: GnimcConfig {
            max_outer_iters: max_iters,
            ..GnimcConfig::default()
        },
        step: StepSpec::default(),
    }
}

fn rgd(max_iters: usize) -> SolverSpec {
    SolverSpec::Rgd {
        config: GnimcConfig {
            max_outer_iters: max_iters,
            ..GnimcConfig::default()
        },
        step: StepSpec::default(),
        lambda: 1.0,
    }
}

fn base(name: &str, dims: Dims) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        dims,
        kappas: vec![10.0],
        spectrum: None,
        sample_sizes: vec![SampleSize::Rho(1.5)],
        noise_sigmas: vec![0.0],
        noise_targets: vec![NoiseTarget::Entries],
        solvers: vec![gnimc()],
        init: InitSpec::Spectral,
        num_seeds: 50,
        base_seed: 0,
        time_limit_secs: None,
        target_rel_rmse: 1e-4,
        stop_at_target: false,
        write_traces: None,
        rank: None,
        rip: None,
        acceptance: None,
        output: None,
    }
}

fn gnimc_acceptance(fraction: f64) -> Option<Acceptance> {
    Some(Acceptance {
        solver: "gnimc".into(),
        target: 1e-4,
        min_success_fraction: fraction,
    })
}

/// Returns the named preset. `full_scale` only affects `fig2-right`, which
/// otherwise ships at half the row count.
pub fn preset(name: &str, full_scale: bool) -> Result<ExperimentConfig> {
    let cfg = match name {
        "fig1-left" => ExperimentConfig {
            solvers: vec![gnimc(), altmin(1000), gd(100_000), rgd(100_000)],
            time_limit_secs: Some(60.0),
            acceptance: gnimc_acceptance(0.9),
            ..base(name, DESK)
        },
        "fig1-right" => ExperimentConfig {
            kappas: vec![1.0, 10.0, 100.0, 1000.0],
            solvers: vec![gnimc(), altmin(1000), gd(1_000_000), rgd(1_000_000)],
            num_seeds: 20,
            stop_at_target: true,
            time_limit_secs: Some(120.0),
            write_traces: Some(false),
            ..base(name, DESK)
        },
        "fig2-left" => ExperimentConfig {
            sample_sizes: rho_grid(),
            solvers: vec![gnimc(), altmin(1000), gd(100_000), rgd(100_000)],
            stop_at_target: true,
            time_limit_secs: Some(120.0),
            write_traces: Some(false),
            ..base(name, DESK)
        },
        "fig2-right" => {
            let dims = Dims {
                n1: if full_scale { 20_000 } else { 10_000 },
                n2: 1000,
                d1: 100,
                d2: 50,
                r: 5,
            };
            ExperimentConfig {
                sample_sizes: rho_grid(),
                solvers: vec![gnimc(), altmin(1000), gd(100_000), rgd(100_000)],
                stop_at_target: true,
                time_limit_secs: Some(300.0),
                write_traces: Some(false),
                ..base(name, dims)
            }
        }
        "fig3-noise" => ExperimentConfig {
            noise_sigmas: vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1],
            noise_targets: vec![NoiseTarget::Entries, NoiseTarget::Features, NoiseTarget::Both],
            solvers: vec![SolverSpec::Gnimc {
                config: GnimcConfig::noisy(),
            }],
            num_seeds: 10,
            write_traces: Some(false),
            ..base(name, DESK)
        },
        "fig4-rank" => ExperimentConfig {
            dims: Dims {
                n1: 3000,
                n2: 1000,
                d1: 30,
                d2: 20,
                r: 10,
            },
            spectrum: Some(FIG4_SPECTRUM.to_vec()),
            sample_sizes: vec![SampleSize::Rate(0.01)],
            solvers: vec![],
            rank: Some(RankSpec {
                d_choices: vec![DChoice::Zero, DChoice::Default],
                expected_rank: 5,
            }),
            acceptance: Some(Acceptance {
                solver: "rankest".into(),
                target: 0.0,
                min_success_fraction: 0.9,
            }),
            ..base(name, DESK)
        },
        "table2-rho-sweep" => ExperimentConfig {
            kappas: vec![1.0, 10.0, 100.0, 1000.0, 10_000.0],
            sample_sizes: rho_grid(),
            solvers: vec![SolverSpec::Gnimc {
                config: GnimcConfig {
                    max_outer_iters: 1000,
                    ..GnimcConfig::default()
                },
            }],
            num_seeds: 50,
            write_traces: Some(false),
            ..base(name, DESK)
        },
        "rip-probe" => ExperimentConfig {
            dims: Dims {
                n1: 400,
                n2: 400,
                d1: 10,
                d2: 10,
                r: 10,
            },
            kappas: vec![1.0],
            sample_sizes: vec![
                SampleSize::RipRate {
                    delta: 0.5,
                    shrink: 1.0,
                },
                SampleSize::RipRate {
                    delta: 0.5,
                    shrink: 10.0,
                },
                SampleSize::RipRate {
                    delta: 0.5,
                    shrink: 100.0,
                },
            ],
            solvers: vec![],
            num_seeds: 20,
            rip: Some(RipSpec {
                rank_tested: 10,
                trials: 100,
                test_matrices: vec![
                    TestMatrix::Gaussian,
                    TestMatrix::Conditioned(1.0),
                    TestMatrix::Conditioned(100.0),
                ],
                delta: 0.5,
            }),
            acceptance: Some(Acceptance {
                solver: "rip".into(),
                target: 0.5,
                min_success_fraction: 0.95,
            }),
            ..base(name, DESK)
        },
        "landscape-gd" => ExperimentConfig {
            dims: Dims {
                n1: 400,
                n2: 400,
                d1: 10,
                d2: 10,
                r: 3,
            },
            kappas: vec![2.0],
            sample_sizes: vec![SampleSize::LandscapeRate { factor: 1.0 }],
            solvers: vec![SolverSpec::Gd {
                config: GnimcConfig {
                    max_outer_iters: 20_000,
                    ..GnimcConfig::default()
                },
                step: StepSpec::Fixed(0.2),
            }],
            init: InitSpec::Random { variance: None },
            num_seeds: 20,
            target_rel_rmse: 1e-3,
            stop_at_target: true,
            acceptance: Some(Acceptance {
                solver: "gd".into(),
                target: 1e-3,
                min_success_fraction: 1.0,
            }),
            ..base(name, DESK)
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
