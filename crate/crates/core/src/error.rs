use thiserror::Error;

use crate::engine::JumpKind;

/// Errors produced by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate {kind:?} jump at site {site}: weight {weight:e}")]
    DegenerateJump {
        kind: JumpKind,
        site: usize,
        weight: f64,
    },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("outside domain of validity: {0}")]
    Domain(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("trajectory {index} (seed {seed}) failed at t = {time}: {source}")]
    Trajectory {
        index: u64,
        seed: u64,
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
