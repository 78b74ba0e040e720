//! Beable models of the two-spin-½ singlet experiment, audited against
//! Bell's local-causality conditions.
//!
//! The library keeps four built-in representations of the singlet statistics
//! — an ontic state-vector model, two angular delta-mixture models, and a
//! local deterministic contrast model — and mechanically checks each of them
//! against outcome independence, parameter independence, measurement
//! independence, the perfect-anticorrelation support constraints, derived
//! determinism, CHSH bounds and the four-observable joint-distribution
//! construction. An exact two-qubit Born-rule oracle serves as ground truth
//! throughout.
//!
//! Everything is pure and immutable after construction; grid sweeps and
//! sample batches run data-parallel under the `parallel` feature (on by
//! default) with an identical sequential fallback.

pub mod angles;
pub mod audit;
pub mod chsh;
pub mod config;
pub mod error;
pub mod fine;
pub mod model;
pub mod par;
pub mod quantum;
pub mod report;

pub use error::{Error, Result};
pub use model::{BeableAtom, BeableDensity, BeableModel, KernelForm, KernelPreset, Party};
pub use quantum::{born_joint, correlation, Outcome, Setting, TwoQubitState};
