use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime below 2^31")]
    NotOddPrime(u64),
    #[error("entry {entry} is not reduced mod {p}")]
    EntryOutOfRange { entry: u64, p: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operands use different moduli")]
    ModulusMismatch,
    #[error("vector is not a codeword of the outer code")]
    NotACodeword,
    #[error("coordinate {index} ({value}) is not on the lattice grid")]
    NotOnGrid { index: usize, value: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("instance too large: {configurations} configurations exceed the budget of {budget}")]
    InstanceTooLarge { configurations: u128, budget: u64 },
    #[error("divergence is infinite")]
    InfiniteDivergence,
}
