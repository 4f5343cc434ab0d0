//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by channel construction, filtering, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions or otherwise unusable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A parameter violates its documented range (e.g. Λ+m ≤ 0, empty grid).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A channel matrix carries no energy, so no beam can be selected.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// Numerical failure (factorization or solve) inside a filter step.
    #[error("numerical failure{}: {msg}", slot.map(|s| format!(" at slot {s}")).unwrap_or_default())]
    Numerical { slot: Option<usize>, msg: String },

    /// Empty or otherwise unusable input to an aggregation.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            slot: None,
            msg: msg.into(),
        }
    }

    /// Attach a slot index to a numerical error for episode diagnostics.
    pub fn with_slot(self, slot: usize) -> Self {
        match self {
            Error::Numerical { msg, .. } => Error::Numerical {
                slot: Some(slot),
                msg,
            },
            other => other,
        }
    }
}
