use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity that must be finite and positive was not (for example a
    /// zero intensity at an event time).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("ingestion error{}: {msg}", row_suffix(*.row))]
    Ingest { row: Option<usize>, msg: String },

    #[error("estimation failed: {}", summarize_starts(.starts))]
    Estimation { starts: Vec<StartDiagnostic> },

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn ingest(row: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Ingest {
            row,
            msg: msg.into(),
        }
    }
}

fn row_suffix(row: Option<usize>) -> String {
    match row {
        Some(r) => format!(" at row {r}"),
        None => String::new(),
    }
}

/// Outcome of one optimizer start, kept for failure reports.
#[derive(Debug, Clone, PartialEq)]
pub struct StartDiagnostic {
    pub index: usize,
    /// Starting point in natural coordinates.
    pub start: Vec<f64>,
    /// Objective at the starting point.
    pub initial: f64,
    /// Objective at the end of the run.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub reason: String,
}

impl fmt::Display for StartDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "start {} ({} iterations, objective {}): {}",
            self.index, self.iterations, self.objective, self.reason
        )
    }
}

fn summarize_starts(starts: &[StartDiagnostic]) -> String {
    let mut out = format!("{} starts, none usable", starts.len());
    for s in starts.iter().take(5) {
        out.push_str("; ");
        out.push_str(&s.to_string());
    }
    out
}
