use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "Newton iteration did not converge at step {step} after {iterations} iterations \
         (last residual {residual:e})"
    )]
    NonConvergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("initial energy is zero")]
    ZeroInitialEnergy,

    #[error("empty interval: {0}")]
    EmptyInterval(String),

    #[error("no periodicity detected: {0}")]
    NoPeriodicity(String),

    #[error("convergence study is not monotone: {0}")]
    NonMonotoneConvergence(String),

    #[error("unknown scenario `{name}`; valid scenarios: {}", valid.join(", "))]
    UnknownScenario { name: String, valid: Vec<String> },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach the time-step index to a solver failure.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            Error::NonConvergence {
                iterations,
                residual,
                ..
            } => Error::NonConvergence {
                step,
                iterations,
                residual,
            },
            other => other,
        }
    }
}

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for solver
    /// failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 4,
            Error::NonConvergence { .. } | Error::NotPositiveDefinite { .. } => 3,
            _ => 2,
        }
    }
}
