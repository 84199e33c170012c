use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} index {index} out of range (size {size})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("operator is not hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("no ancilla register available: {0}")]
    NoAncilla(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(what: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, index, size })
    }
}
