//! Inductive matrix completion: recover `X* = A M* Bᵀ` from a few observed
//! entries and known feature subspaces `A`, `B`.
//!
//! - [`problem`] generates instances, samples Ω and measures recovery.
//! - [`sensing`] maps `M` to its observed entries and probes the RIP.
//! - [`gnimc`] is the Gauss-Newton solver; [`baselines`] holds AltMin, GD
//!   and RGD.
//! - [`rankest`] estimates the rank from spectral gaps.
//! - [`bench`] runs seeded experiments and writes CSV.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod gnimc;
pub mod init;
pub mod linops;
pub mod problem;
pub mod random;
pub mod rankest;
pub mod sensing;

pub use error::{Error, Result};
