use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// The variants split into two families: caller mistakes (bad arguments,
/// unmet preconditions) and numerical failures (indefinite operators,
/// stalled iterations). [`Error::is_input_error`] tells them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("point {point:?} is within {distance:.3e} of the boundary, need margin {required:.3e}")]
    Margin {
        point: Vec<[f64; 2]>,
        distance: f64,
        required: f64,
    },

    #[error("operator is not positive definite: {0}")]
    Definiteness(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    SolverNoConvergence { iterations: usize, residual: f64 },

    #[error("right-hand side is not in the range of dbar (residual floor {residual:.3e})")]
    Inconsistent { residual: f64 },

    #[error("quadrature resolution insufficient: relative change {change:.3e} under refinement exceeds {limit:.1e}")]
    Resolution { change: f64, limit: f64 },
}

impl Error {
    /// True for errors caused by the caller's arguments rather than by
    /// the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::Refused(_)
                | Error::UnsupportedDimension(_)
                | Error::Margin { .. }
                | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
