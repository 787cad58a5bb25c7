use thiserror::Error;

use crate::types::SystemType;

/// Errors raised by evaluation, decision procedures and constructors.
///
/// Parse failures have their own located error type, [`crate::model::ParseError`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("type mismatch: {left} does not compose with {right}")]
    TypeMismatch { left: SystemType, right: SystemType },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("unbound generator `{0}`")]
    UnboundGenerator(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not causal: {0}")]
    NotCausal(String),

    #[error("CPTP violation: {0}")]
    CptpViolation(String),

    #[error("not a product type: {0}")]
    NotAProductType(String),

    #[error("state is not pure: {0}")]
    NotPure(String),

    #[error("states from different backends mixed in one operation")]
    MixedBackends,

    #[error("index sets differ: {0}")]
    IndexMismatch(String),

    #[error("states are not distinguishable: {0}")]
    NotDistinguishable(String),

    #[error("channel does not map the family as claimed: {0}")]
    MappingMismatch(String),

    #[error("side-information channel correlates its output for `{0}`")]
    FactorizationFailure(String),

    #[error("duplicate states `{0}` and `{1}`")]
    DuplicateStates(String, String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    /// A proposition that must hold in every model was found false.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
