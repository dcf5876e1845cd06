use thiserror::Error;

/// Errors raised by the solvers, the harness and the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("argument |z| = {modulus:.3} outside the evaluation envelope")]
    EnvelopeExceeded { modulus: f64 },

    #[error("resolution insufficient: residual {residual:.3e} exceeds {tolerance:.3e}")]
    ResolutionInsufficient { residual: f64, tolerance: f64 },

    #[error("singular system (pivot ratio {pivot_ratio:.3e})")]
    SingularSystem { pivot_ratio: f64 },

    #[error("compatibility violated: {0}")]
    CompatibilityViolated(String),

    #[error("degenerate denominator {value:.3e} below floor {floor:.3e}")]
    DegenerateDenominator { value: f64, floor: f64 },

    #[error("regime paths disagree: relative gap {gap:.3e}")]
    OverlapMismatch { gap: f64 },

    #[error("spectral condition unverified for theta = {theta}")]
    SpectralConditionUnverified { theta: f64 },

    #[error("no convergence after {iterations} iterations (last increment {last:.3e})")]
    NoConvergence { iterations: usize, last: f64, history: Vec<f64> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
