//! Benchmark harness: JSON experiment configs, seeded sweeps over κ, |Ω|
//! and σ, solver dispatch, CSV emission and acceptance checks.
//!
//! Every realization draws its truth, Ω, noise and initialization from
//! streams derived from `(base_seed, setting, seed index)`, so reruns are
//! bit-identical apart from the timing columns listed in [`TIMING_COLUMNS`].

mod config;
mod experiments;
mod presets;
mod run;
pub mod stats;

pub use config::{
    Acceptance, DChoice, ExperimentConfig, InitSpec, RankSpec, RipSpec, SampleSize, SolverSpec,
    StepSpec, TestMatrix,
};
pub use experiments::{
    conditioning_trace, cost_parity, cost_parity_experiment, landscape, noise_sweep,
    rank_experiment, rip_experiment, CostParity, GapRow, NoiseRow, NoiseSweep, RankExperiment,
    RankRow, RipExperiment, RipRow, RipSummary,
};
pub use presets::{preset, FIG4_SPECTRUM, PRESET_NAMES};
pub use run::{
    build_instance, effective_config, evaluate_acceptance, initialize, literal_step,
    run_experiment, run_seed, run_solver, setting_seed, settings, with_pool, write_csv,
    AcceptanceRow, ExperimentResult, Instance, RunOptions, RunRecord, Setting, SummaryRow,
    TIMING_COLUMNS,
};
