use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is outside the admissible region: {0}")]
    OutsideDomain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("quadrature did not reach tolerance: estimated relative error {rel_err:.3e} > {tol:.1e} ({context})")]
    Quadrature {
        context: &'static str,
        rel_err: f64,
        tol: f64,
    },

    #[error("boundary projection failed to converge: {0}")]
    Projection(String),

    #[error("corkscrew containment check failed: achieved radius ratio {achieved:.4} < kappa {kappa:.4} at r = {r:.4e}")]
    Containment { achieved: f64, kappa: f64, r: f64 },

    #[error("witness point fails membership: {0}")]
    Witness(String),

    #[error("empty exponent interval: {0}")]
    EmptyInterval(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("table error: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
