use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent p must exceed 1 (got {0})")]
    ExponentOutOfRange(String),

    #[error("cannot parse {0:?} as an exact rational")]
    ParseRational(String),

    #[error("working precision of {requested} bits exceeds the supported maximum of {max} bits")]
    PrecisionInfeasible { requested: u64, max: u32 },

    #[error("working precision must be at least {min} bits (got {got})")]
    PrecisionTooLow { got: u32, min: u32 },

    #[error("values carry different precisions ({0} vs {1} bits)")]
    PrecisionMismatch(u32, u32),

    #[error("index {index} lies outside the grid [0, {bound}]")]
    OutOfGrid { index: usize, bound: usize },

    #[error("supersolution is not positive at n = {0}")]
    NonPositiveSupersolution(usize),

    #[error("coefficient rings differ")]
    RingMismatch,

    #[error("series has a nonzero constant term")]
    NonzeroConstantTerm,

    #[error("argument {value} outside the admissible window {window}")]
    Domain { value: String, window: &'static str },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Rayleigh quotient has a zero denominator")]
    ZeroDenominator,
}

pub type Result<T> = std::result::Result<T, Error>;
