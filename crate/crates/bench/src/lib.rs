//! Sweeps, bound checks and reports for the `aemsim-core` algorithms.
//!
//! A [`SweepSpec`] expands into a grid of [`GridPoint`]s. Each point runs one
//! algorithm on one generated input inside a fresh simulator and yields a
//! [`RunReport`] holding the measured transfers, the bound they were checked
//! against and the outcome. Reports are written as CSV or JSON by
//! [`emit_report`].
//!
//! Bounds come in two kinds. Exact bounds are closed-form transfer counts
//! compared with zero tolerance. Constant-fit bounds scale an asymptotic
//! expression by a fixed allowance; the fitted constant (measured divided by
//! the expression) is reported alongside.

pub mod fixture;
pub mod point;
pub mod report;
pub mod run;
pub mod sweep;

pub use point::{Algo, GridPoint, LambdaSpec};
pub use report::{emit_report, read_json, write_csv, write_json, BoundKind, Format, RunReport, Status, Unit, SCHEMA_VERSION};
pub use run::run_point;
pub use sweep::{exit_code, run_sweep, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Parse(String),
    #[error("cannot write report to {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
