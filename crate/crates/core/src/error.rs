use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix")]
    SingularMatrix,

    #[error("matrix is not unimodular: |det - 1| = {0:e}")]
    NotUnimodular(f64),

    #[error("coefficient index {requested} exceeds generator horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    #[error("length {requested} exceeds system horizon {horizon}")]
    LengthBeyondHorizon { requested: f64, horizon: f64 },

    #[error("Jacobi coefficient a_{index} = {value} is not positive")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("Verblunsky coefficient alpha_{index} has modulus {modulus} >= 1")]
    VerblunskyOutsideDisk { index: usize, modulus: f64 },

    #[error("measure has only {support} support points; index {requested} unavailable")]
    FiniteSupport { support: usize, requested: usize },

    #[error("recurrence overflow at step {0}")]
    Overflow(usize),

    #[error("use sum mode at diagonal")]
    DiagonalJForm,

    #[error("j-form kernel requires an integer index, got {0}")]
    NonIntegerIndex(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("limit-circle-like stall: Weyl disk radius {radius:e} after length {length}")]
    LimitCircleStall { radius: f64, length: f64 },

    #[error("region is not a disk: {0}")]
    NotADisk(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("singular reparametrization segment at x = {0}")]
    SingularReparam(f64),

    #[error("scale not yet developed: {0:e}")]
    ScaleNotDeveloped(f64),

    #[error("insufficient zeros: {0}")]
    InsufficientZeros(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
