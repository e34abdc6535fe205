use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A generated or supplied column has zero empirical variance.
    #[error("column {column} of {matrix} has zero variance")]
    ZeroVariance { matrix: String, column: usize },

    #[error("power iteration did not converge after {iterations} iterations (direction {direction})")]
    Convergence { iterations: usize, direction: usize },

    /// Covariance blocks are singular, which happens whenever T <= N.
    #[error("undersampled: {what} is singular (T = {samples}, N = {dims}); use rcca instead")]
    Undersampled {
        what: &'static str,
        samples: usize,
        dims: usize,
    },

    #[error("integrator error: relative energy drift {drift:.3e} exceeds {limit:.1e}")]
    Integrator { drift: f64, limit: f64 },

    #[error("non-finite value at training step {step}: {what}")]
    Training { step: usize, what: String },

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
