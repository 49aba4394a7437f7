use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A target value cannot be reached for any admissible parameter.
    /// `floor` names the best value attainable.
    #[error("infeasible target: {reason} (floor = {floor:.6e})")]
    Infeasible { reason: String, floor: f64 },

    /// A computed quantity violated an invariant it is required to satisfy.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// An iterative numerical routine failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Not enough data to estimate the requested quantity.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A configuration file failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// A peer violated the protocol; the session aborts and the violation
    /// is attributed to the offending party.
    #[error("protocol violation by {party}: {what}")]
    ProtocolViolation { party: String, what: String },

    /// Transport-level failure, distinct from a protocol abort.
    #[error("session error: {0}")]
    Session(String),

    /// The two endpoints disagree on the session parameters.
    #[error("parameter hash mismatch: ours {ours:#018x}, theirs {theirs:#018x}")]
    ParamsMismatch { ours: u64, theirs: u64 },

    /// A strategy required a mediator capability that was not granted.
    #[error("capability not granted: {0}")]
    Capability(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
