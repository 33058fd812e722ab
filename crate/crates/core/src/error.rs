use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("a noise seed is required because the network has stochastic layers")]
    MissingSeed,

    #[error("smooth activation `{0}` has no exact piecewise-linear form")]
    SmoothActivation(String),

    #[error("network output depends on more than one input direction")]
    MultivariateDependence,

    #[error("stochastic layer present where a deterministic network is required")]
    StochasticLayer,

    #[error("step activation is not differentiable")]
    NonDifferentiable,

    #[error("measure support [{lo}, {hi}] lies outside the function domain [{dom_lo}, {dom_hi}]")]
    SupportOutsideDomain {
        lo: f64,
        hi: f64,
        dom_lo: f64,
        dom_hi: f64,
    },

    #[error("unbounded support")]
    UnboundedSupport,

    #[error("network output is not a probability vector: {0}")]
    NonProbabilisticOutput(String),

    #[error("q vanishes where p is positive (atom {0})")]
    AbsoluteContinuityViolation(usize),

    #[error("cost is infinite at a probe point")]
    InfiniteCost,

    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
