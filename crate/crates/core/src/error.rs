use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("map does not preserve joins: {0}")]
    NotJoinPreserving(String),
    #[error("not a closure system: {0}")]
    NotClosureSystem(String),
    #[error("anchor is not open: Frobenius fails at {0}")]
    NotOpen(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("not a sheaf homomorphism: {0}")]
    NotSheafHom(String),
    #[error("map is not equivariant: {0}")]
    NotEquivariant(String),
    #[error("map does not preserve joins of compatible sections: {0}")]
    NotCompatiblePreserving(String),
    #[error("invalid groupoid: {0}")]
    InvalidGroupoid(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid bi-action: {0}")]
    InvalidBiAction(String),
    #[error("invalid functor: {0}")]
    InvalidFunctor(String),
    #[error("invalid quantale: {0}")]
    InvalidQuantale(String),
    #[error("invalid module: {0}")]
    InvalidModule(String),
    #[error("no stable support: {0}")]
    NoStableSupport(String),
    #[error("right structure is not open: {0}")]
    NotOpenRight(String),
    #[error("not a bisheaf: {0}")]
    NotBisheaf(String),
    #[error("quantale mismatch: {0}")]
    QuantaleMismatch(String),
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("not principal: {0}")]
    NotPrincipal(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("search inconclusive up to carrier size {0}")]
    Inconclusive(usize),
    #[error("too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
