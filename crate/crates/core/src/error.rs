use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A point lies within the anchor-proximity threshold of an anchor where
    /// the operation needs it to stay away.
    #[error("point is within {distance:e} of anchor {index}")]
    AnchorProximity { index: usize, distance: f64 },

    #[error("point is infeasible (distance {distance:e} to the constraint set)")]
    Infeasible { distance: f64 },

    #[error("anchors are collinear; the minimizer is not unique")]
    Collinear,

    /// The anchor test reported non-optimality but no descent step was found.
    #[error("anchor escape from anchor {anchor} failed to decrease the objective")]
    EscapeFailure { anchor: usize },

    /// The solution coincides with an anchor, where the value function is not
    /// differentiable.
    #[error("solution coincides with anchor {index}")]
    AnchorSolution { index: usize },

    #[error("invalid instance at `{path}`: {message}")]
    InvalidInstance { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidInstance {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
