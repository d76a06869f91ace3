use crate::expr::{EvalError, ParseError};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("rank indeterminate at ({}, {}): singular value {sigma:e} straddles tolerance {tol:e}", point[0], point[1])]
    RankIndeterminate { point: [f64; 2], sigma: f64, tol: f64 },
    #[error("condition (H0) violated at ({}, {}): {reason}", point[0], point[1])]
    H0Violation { point: [f64; 2], reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-transversal crossing of the singular locus near ({}, {}); refine the grid", point[0], point[1])]
    NonTransversal { point: [f64; 2] },
    #[error("tangency point at an open curve end near ({}, {}) cannot be resolved", point[0], point[1])]
    UnresolvedTangency { point: [f64; 2] },
    #[error("trajectory left the chart at t = {time} near ({}, {})", point[0], point[1])]
    ExitedDomain { time: f64, point: [f64; 2] },
    #[error("curve is not transversal to the distribution at ({}, {})", point[0], point[1])]
    Transversality { point: [f64; 2] },
    #[error("no geodesic of the fan reached the singular locus within length {cap}")]
    NoHit { cap: f64 },
    #[error("point ({}, {}) lies on or too close to the singular locus", point[0], point[1])]
    OnSingularLocus { point: [f64; 2] },
    #[error("quadrature did not converge: {0}")]
    Unconverged(String),
    #[error("limit order violated: {0}")]
    LimitOrder(String),
    #[error("sign of {what} not stable under refinement at ({}, {})", point[0], point[1])]
    UnstableSign { what: &'static str, point: [f64; 2] },
    #[error("resolution failure: {0}")]
    Resolution(String),
    #[error("Euler number mismatch: computed {computed}, declared {declared}")]
    EulerMismatch { computed: i64, declared: i64 },
    #[error("invalid surface description: {0}")]
    Schema(String),
    #[error("unknown surface `{0}`")]
    UnknownSurface(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of numerical convergence (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Unconverged(_)
                | Error::NoHit { .. }
                | Error::UnstableSign { .. }
                | Error::Resolution(_)
                | Error::RankIndeterminate { .. }
                | Error::ExitedDomain { .. }
                | Error::NonTransversal { .. }
        )
    }
}
