use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NON_POSITIVE_SPAN: interval [{lo}, {hi}] has no positive length")]
    NonPositiveSpan { lo: f64, hi: f64 },
    #[error("BAD_POINT_COUNT: {0} points (need an odd count of at least 3)")]
    BadPointCount(usize),
    #[error("LENGTH_MISMATCH: {samples} samples on a grid of {grid} points")]
    LengthMismatch { samples: usize, grid: usize },
    #[error("TOO_FEW_POINTS: {have} points, need at least {need}")]
    TooFewPoints { have: usize, need: usize },
    #[error("OUT_OF_SUPPORT: ({x}, {y}) lies outside the kernel support")]
    OutOfSupport { x: f64, y: f64 },
    #[error("DIMENSION_MISMATCH: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("SINGULAR_SYSTEM: condition number {cond:.3e} at x = {x}")]
    SingularSystem { x: f64, cond: f64 },
    #[error("KIND_MISMATCH: {expected} expected, {found} supplied")]
    KindMismatch { expected: &'static str, found: &'static str },
    #[error("OUT_OF_DOMAIN: {0}")]
    OutOfDomain(String),
    #[error("NONCONVERGENT_TAIL: integrand still {ratio:.3e} of its peak at the cutoff {cutoff}")]
    NonconvergentTail { cutoff: f64, ratio: f64 },
    #[error("SINGULAR_GAMMA: condition number {cond:.3e} at x = {x}")]
    SingularGamma { x: f64, cond: f64 },
    #[error("NONPOSITIVE_GAMMA: Gamma = {value} at x = {x}")]
    NonpositiveGamma { x: f64, value: f64 },
    #[error("ETA_NOT_POSITIVE: eta = {value} at x = {x}")]
    EtaNotPositive { x: f64, value: f64 },
    #[error("ZERO_DENOMINATOR: {0}")]
    ZeroDenominator(String),
    #[error("UNKNOWN_ID: {0}")]
    UnknownId(String),
    #[error("DEGENERATE_PARAMS: {0}")]
    DegenerateParams(String),
    #[error("INVALID_SPEC: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
