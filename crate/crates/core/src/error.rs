use thiserror::Error;

pub type Result<T, E = AfcmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AfcmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature list is empty")]
    EmptyFeatures,

    #[error("covariance factorization failed with jitter up to {jitter:e}")]
    Factorization { jitter: f64 },

    #[error(
        "least-squares system is underdetermined: {rows} rows ({dropped} degenerate rows dropped) \
         for {cols} unknowns; add collocation points or reduce features"
    )]
    Underdetermined {
        rows: usize,
        cols: usize,
        dropped: usize,
    },

    #[error("non-finite matrix entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("non-finite right-hand side at row {row}")]
    NonFiniteRhs { row: usize },

    #[error("non-finite solution gradient at ({x}, {y})")]
    NonFiniteGradient { x: f64, y: f64 },

    #[error("cannot draw {requested} distinct samples from {available} points")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("Picard iteration diverged at step {step}: change grew from {first:e} to {last:e}")]
    PicardDiverged { step: usize, first: f64, last: f64 },

    #[error("exact solution has zero norm on the evaluation grid")]
    ZeroExactNorm,

    #[error("adaptive iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<AfcmError>,
    },

    #[error("time step {step}: {source}")]
    TimeStep {
        step: usize,
        #[source]
        source: Box<AfcmError>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AfcmError {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        AfcmError::Iteration {
            iteration,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        AfcmError::TimeStep {
            step,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            AfcmError::Iteration { source, .. } | AfcmError::TimeStep { source, .. } => {
                source.is_solver_failure()
            }
            AfcmError::Config(_) | AfcmError::InvalidArgument(_) | AfcmError::Io(_) => false,
            AfcmError::Json(_) => false,
            _ => true,
        }
    }
}
