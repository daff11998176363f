use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An argument lies outside the domain of the function.
    #[error("argument outside domain: {0}")]
    Domain(String),

    /// A coefficient of the differential system is singular at the point.
    #[error("singular point: {0}")]
    Singular(String),

    /// Two coordinates of the evaluation point coincide (within the gap).
    #[error(
        "diagonal singularity: coordinates {i} and {j} are closer than {gap:e}; \
         the holonomic system is singular on x_i = x_j (use the series or null-case routines)"
    )]
    DiagonalSingularity { i: usize, j: usize, gap: f64 },

    /// The initial value for the ODE could not be established.
    #[error("initialization failed: {0}")]
    Initialization(String),

    /// A series needed more terms than allowed.
    #[error("series did not converge by degree {degree}")]
    SeriesNotConverged { degree: usize },

    /// The adaptive integrator gave up.
    #[error("integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
