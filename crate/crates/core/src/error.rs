use thiserror::Error;

/// Errors produced by geometry, integration, and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state contains a non-finite coordinate")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("degenerate direction: coincident disk centers {i} and {j}")]
    DegenerateDirection { i: usize, j: usize },

    #[error("operation not supported for {0}")]
    Unsupported(&'static str),

    #[error("point is not on the boundary of the set")]
    NotOnBoundary,

    #[error("oracle grid found no feasible point; resolution too coarse")]
    ResolutionTooCoarse,

    #[error("cyclic projection did not reach feasibility after {sweeps} sweeps (violation {violation:e})")]
    ProjectionNotConverged { sweeps: usize, violation: f64 },

    #[error("step too large at t={t}: free-step distance {distance} exceeds guard {limit}")]
    StepTooLarge { t: f64, distance: f64, limit: f64 },

    #[error("integration failed at t={t} after repeated step halving")]
    IntegrationFailure { t: f64 },

    #[error("period-map iteration did not converge after {iterations} iterations (last displacement {displacement:e}, diverging: {diverging})")]
    NotConverged {
        iterations: usize,
        displacement: f64,
        diverging: bool,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Failures of the numerics themselves, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::StepTooLarge { .. }
                | Error::IntegrationFailure { .. }
                | Error::NotConverged { .. }
                | Error::ProjectionNotConverged { .. }
                | Error::ResolutionTooCoarse
                | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
