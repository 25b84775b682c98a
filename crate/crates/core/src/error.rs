use thiserror::Error;

/// Everything that can go wrong inside the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("unknown irrep {0}")]
    UnknownIrrep(String),
    #[error("unknown group {0:?} (expected z2 or s3)")]
    UnknownGroup(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("faces {0} and {1} share no edge")]
    NotAdjacent(String, String),
    #[error("edge {edge} is not incident on vertex {vertex}")]
    NotIncident { vertex: String, edge: String },
    #[error("operation requires {expected} boundary")]
    WrongBoundary { expected: &'static str },
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("measurement basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("basis has {got} vectors of length {len}, site dimension is {dim}")]
    BasisShape { got: usize, len: usize, dim: usize },
    #[error("outcome {outcome} has probability {probability:e}")]
    ZeroProbability { outcome: usize, probability: f64 },
    #[error("operator annihilates the state")]
    Annihilated,
    #[error("site map is not a permutation of basis configurations")]
    NotAPermutation,
    #[error("control site {0} is also a target")]
    SiteOverlap(usize),
    #[error("site {site} is not in the required state: {reason}")]
    AncillaNotReady { site: usize, reason: String },
    #[error("states have different site layouts")]
    LayoutMismatch,
    #[error("site layout needs {0} bits, keys hold 128")]
    KeyOverflow(u32),
    #[error("value {value} does not fit site {site} of dimension {dim}")]
    ValueOutOfRange { site: usize, value: usize, dim: usize },
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("validation error: {0}")]
    Validation(String),
}

impl Error {
    /// Bad user input as opposed to a failure while simulating.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::UnknownGroup(_) | Error::UnknownIrrep(_) | Error::InvalidLattice(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(what: &'static str, index: usize, limit: usize) -> Result<()> {
    if index < limit {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, index, limit })
    }
}
