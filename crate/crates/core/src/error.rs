use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("rank deficient: rank {rank} < {needed}")]
    RankDeficient { rank: usize, needed: usize },

    /// Over-determined GF(2) system with no solution.
    #[error("inconsistent linear system")]
    InconsistentSystem,

    #[error("{what} exceeds enumeration budget ({limit})")]
    TooLarge { what: &'static str, limit: usize },

    #[error("all codewords are zero")]
    ZeroMatrix,

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
