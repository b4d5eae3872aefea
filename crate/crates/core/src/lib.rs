//! Energy-aware global scheduling of frame-based real-time tasks on
//! identical multiprocessors with discrete frequency levels.
//!
//! Frequencies for each task come from an offline table computed on a
//! single virtual processor of length `m * D`. At run time a reservation
//! scheme keeps a worst-case slot for every pending task so that any choice
//! read from the table still lets the whole frame finish by `D`.

pub mod baselines;
pub mod cli;
pub mod engine;
pub mod error;
pub mod model;
#[cfg(feature = "test-support")]
pub mod oracle;
pub mod partition;
pub mod scheduler;
pub mod sfunc;
pub mod workload;

pub use error::{Error, Result};
