//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation was requested at (or too close to) a drift singularity.
    #[error("singular drift at x = {x:e}: node at {node:e}")]
    Singularity { x: f64, node: f64 },

    /// A series or iteration failed to reach the requested accuracy.
    /// Carries the best value obtained so far.
    #[error("accuracy not reached in {context}: partial value {partial:e}")]
    Accuracy { context: String, partial: f64 },

    /// Probability mass in a sector changed more than the solver tolerance.
    #[error("sector {sector} mass drifted by {drift:e} (tolerance {tol:e})")]
    Conservation { sector: usize, drift: f64, tol: f64 },

    /// A density developed negative values beyond the solver tolerance.
    #[error("density positivity violated: min value {min:e}")]
    Positivity { min: f64 },

    /// Quadrature lost too much mass.
    #[error("quadrature mass {mass} deviates from 1 beyond {tol:e}")]
    Quadrature { mass: f64, tol: f64 },

    /// Invalid grid specification.
    #[error("grid error: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
