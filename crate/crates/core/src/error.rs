use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("array length {actual} does not match grid size {expected}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("kernel-sum form has no torus multiplier here; use kernel_to_multiplier first or call the quadrature path")]
    KernelSumForm,

    #[error("unsupported Riesz order: {0}")]
    UnsupportedOrder(String),

    #[error("divergent kernel: alpha = {alpha} is not below the dimension {dim}")]
    DivergentKernel { alpha: f64, dim: usize },

    #[error("quadrature tolerance not met: estimate {estimate:e}, error {error:e}")]
    ToleranceNotMet { estimate: f64, error: f64 },

    #[error("data quality: {count} cells below the negativity tolerance (min {min:e})")]
    NegativeDensity { count: usize, min: f64 },

    #[error("linear solve failed (residual {residual:e})")]
    LinearSolve { residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
