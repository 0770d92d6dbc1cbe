use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or non-finite input data.
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {left} vs {right} points")]
    GridMismatch { left: usize, right: usize },

    /// The drift vanishes or changes sign somewhere on the grid.
    #[error("nonsingularity violated: drift ranges over [{min}, {max}]")]
    Nonsingularity { min: f64, max: f64 },

    #[error("diffusion coefficient must be strictly positive (min sample {min})")]
    DegenerateDiffusion { min: f64 },

    #[error("precision exhausted at eps = {eps}; smallest safe eps is {smallest_safe_eps}")]
    PrecisionExhausted { eps: f64, smallest_safe_eps: f64 },

    #[error("singular or ill-conditioned linear system (condition estimate {condition_estimate:e})")]
    SingularSystem { condition_estimate: f64 },

    #[error("solver produced negative density {min_value:e}")]
    NegativeDensity { min_value: f64 },

    #[error("replaced equation residual {residual:e} exceeds tolerance")]
    ReplacedRowResidual { residual: f64 },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("density is under-resolved at eps = {eps} on {n} points; try n >= {suggested_n}")]
    RefineGrid { eps: f64, n: usize, suggested_n: usize },

    #[error("mode error: {0}")]
    Mode(String),

    #[error("divergence check failed: sup |div h| = {sup:e}")]
    Divergence { sup: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}
