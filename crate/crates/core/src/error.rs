//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("spin count L={l} exceeds the dense-operator cap L_max={l_max}")]
    CapacityExceeded { l: usize, l_max: usize },

    #[error("site index {site} out of range for L={l}")]
    SiteOutOfRange { site: usize, l: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("density operator invalid: {0}")]
    InvalidState(String),

    #[error(
        "integration instability: min eigenvalue {min_eig:.3e} below -{tol:.1e} at t={t:.6e}; \
         try a smaller dt"
    )]
    IntegrationInstability { min_eig: f64, tol: f64, t: f64 },

    #[error("sweep point {index} failed: {source}")]
    SweepPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular response: {0}")]
    SingularResponse(String),

    #[error("root bracketing failed on [{a:.6e}, {b:.6e}]: {msg}")]
    BracketFailure { a: f64, b: f64, msg: String },

    #[error("incomplete metadata: {0}")]
    IncompleteMetadata(String),

    #[error("ambiguous branch: {0}")]
    AmbiguousBranch(String),

    #[error("fit did not converge; best residual {best:.6e}")]
    FitNonConvergence { best: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}
