use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    /// The input does not span a full-dimensional body.
    #[error("degenerate body: {0}")]
    Degenerate(String),
    #[error("invalid body: {0}")]
    InvalidBody(String),
    /// Polarity and gauges used for billiards need the origin strictly inside.
    #[error("origin is not an interior point of the body")]
    OriginNotInterior,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    /// An LP failed; `instance` carries a JSON dump of the offending input.
    #[error("numerical failure in {context}: {source}; instance: {instance}")]
    Numerical {
        context: &'static str,
        source: LpError,
        instance: String,
    },
    #[error("no cone of the simplex directions contains the vector (best residual {residual:.3e})")]
    Decomposition { residual: f64 },
    #[error("no normal cage produced a verified non-fitting trajectory")]
    NoTrajectory,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("malformed expression: {0}")]
    MalformedExpression(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
