use thiserror::Error;

use crate::model::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("requested frequency {requested} exceeds the maximum frequency {max}")]
    FrequencyAboveMax { requested: f64, max: f64 },

    #[error("invalid configuration: {}", format_diagnostics(.0))]
    InvalidConfig(Vec<Diagnostic>),

    #[error("remaining time {0} is negative")]
    NegativeRemainingTime(f64),

    #[error("task position {task} out of range for a table of {rows} tasks")]
    TaskOutOfRange { task: usize, rows: usize },

    /// Task and CPU are 0-based positions; the message numbers them from 1.
    #[error("static partitioning failed on task {}: needs {needed}, cpu {} has {available} left", .task + 1, .cpu + 1)]
    PartitionFailed {
        task: usize,
        cpu: usize,
        needed: f64,
        available: f64,
    },

    #[error("no pending task could be started on cpu {} at time {time}", .cpu + 1)]
    Liveness { time: f64, cpu: usize },

    #[error("workload generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("invalid workload spec: {0}")]
    InvalidWorkload(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
