use thiserror::Error;

/// Errors surfaced by the pricing ops, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum XvaError {
    /// A numeric input fell outside its admissible domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A time coordinate reached or passed the contract maturity where the
    /// pricing formula degenerates.
    #[error("degenerate expiry: time {time} is not before maturity {maturity}")]
    DegenerateExpiry { time: f64, maturity: f64 },

    /// The requested operation is only defined for a subset of collateral
    /// regimes and this one is not in it.
    #[error("unsupported collateral regime: {0}")]
    UnsupportedRegime(String),

    /// A solver or experiment specification failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// A vector argument did not have the size required by the discretization.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// The adaptive time integrator could not meet its tolerance with any
    /// representable step size.
    #[error("time integrator step underflow at tau = {last_tau} (step {step:e})")]
    StepUnderflow { last_tau: f64, step: f64 },

    /// Per-row solver failures collected by the harness runner.
    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, XvaError>;
