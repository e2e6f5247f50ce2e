//! Experiment driver: simulation studies, single fits, tuning,
//! classification and timing, all writing CSV.

pub mod bench;
pub mod classify;
pub mod config;
pub mod estimate;
pub mod io;
pub mod simulate;

mod args;

pub use args::run_from_args;

/// Bad input from the user: flags, config or data files. Exits with status 2.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Process exit status for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.downcast_ref::<UsageError>().is_some()) {
        2
    } else {
        1
    }
}
