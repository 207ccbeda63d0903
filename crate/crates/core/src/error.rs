//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A line in an input file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// An input violated a data-model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration value is missing or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Negative sampling could not find a non-colliding corruption.
    #[error("resampling budget exhausted after {attempts} attempts for {triple}")]
    NegativeSampling { triple: String, attempts: usize },

    /// The subclass hierarchy contains a cycle.
    #[error("subclass cycle detected: {0}")]
    SubclassCycle(String),

    /// Materialization did not reach a fixpoint within the round limit.
    #[error("materialization did not reach a fixpoint within {limit} rounds")]
    RoundLimit { limit: usize },

    /// Training produced a non-finite loss.
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    /// A symbol or index does not resolve in the graph.
    #[error("unknown {kind}: {symbol}")]
    UnknownId { kind: &'static str, symbol: String },

    /// An adapter was applied to an embedding table it was not trained for.
    #[error("checkpoint fingerprint mismatch: adapter expects {expected}, table has {actual}")]
    FingerprintMismatch { expected: String, actual: String },

    /// A pipeline artifact required by this step has not been produced yet.
    #[error("missing artifact for `{step}`: {hint}")]
    MissingArtifact { step: String, hint: String },

    /// A remote endpoint call failed.
    #[error("gateway error: {0}")]
    Gateway(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
