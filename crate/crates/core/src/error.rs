use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum ChenError {
    #[error("curve needs at least 5 points, got {0}")]
    TooFewPoints(usize),

    #[error("curve dimension must be at least 2, got {0}")]
    BadDimension(usize),

    #[error("point buffer length {len} is not a multiple of dimension {dim}")]
    RaggedPoints { len: usize, dim: usize },

    #[error("degenerate edge {index}: length {length:e} below tolerance")]
    DegenerateEdge { index: usize, length: f64 },

    #[error("neighbours of vertex {index} coincide; tangent undefined")]
    CoincidentNeighbours { index: usize },

    #[error("period vector must be nonzero and match the curve dimension")]
    BadPeriod,

    #[error("operation requires a planar curve, got dimension {0}")]
    UnsupportedDimension(usize),

    #[error("linear solve failed at pivot {pivot}")]
    SolverFailure { pivot: usize },

    #[error("linear solve residual {ratio:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { ratio: f64, tolerance: f64 },

    #[error("run stopped early: {0}")]
    RunStopped(String),

    #[error("matrix of size {0} is too large for the dense solver")]
    TooLargeForDense(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ChenError {
    /// Short machine-readable tag, used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            ChenError::TooFewPoints(_)
            | ChenError::BadDimension(_)
            | ChenError::RaggedPoints { .. }
            | ChenError::DegenerateEdge { .. }
            | ChenError::CoincidentNeighbours { .. }
            | ChenError::BadPeriod => "rejected_curve",
            ChenError::UnsupportedDimension(_) => "unsupported_dimension",
            ChenError::SolverFailure { .. }
            | ChenError::ResidualTooLarge { .. }
            | ChenError::RunStopped(_) => "solver_failure",
            ChenError::TooLargeForDense(_) | ChenError::DimensionMismatch { .. } => "usage",
            ChenError::Domain(_) => "domain",
            ChenError::InvalidConfig(_) => "invalid_config",
            ChenError::Parse { .. } => "parse",
            ChenError::NotApplicable(_) => "not_applicable",
            ChenError::Io(_) => "io",
            ChenError::Json(_) => "json",
        }
    }

    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            ChenError::SolverFailure { .. }
                | ChenError::ResidualTooLarge { .. }
                | ChenError::RunStopped(_)
        )
    }
}

pub type Result<T, E = ChenError> = std::result::Result<T, E>;
