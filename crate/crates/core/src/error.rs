use thiserror::Error;

/// Failure modes shared by the library.
///
/// Numeric payloads are carried as `f64` so the type stays independent of the
/// scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("function has nonzero mean {mean:e} per period (tolerance {tolerance:e})")]
    NonZeroMean { mean: f64, tolerance: f64 },

    #[error("split infeasible: {0}")]
    SplitInfeasible(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("kernel not supported here: {0}")]
    UnsupportedKernel(String),

    #[error("reference ODE is not uniformly exponentially stable: {0}")]
    ReferenceOdeUnstable(String),

    #[error("criterion is not monotone in the swept parameter near {at}")]
    NotMonotone { at: f64 },

    #[error("no certified/not-certified change over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("step {step} too large: step * coefficient bound = {product} > 0.5")]
    StepTooLarge { step: f64, product: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("only {found} envelope points after t = {t_start}, need at least 5")]
    InsufficientPeaks { found: usize, t_start: f64 },

    #[error("solution vanished below the representable range")]
    ZeroSolution,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
