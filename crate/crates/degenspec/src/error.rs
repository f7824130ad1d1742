use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Point outside the operator's dual domain.
    #[error("dual-space point outside domain: {0}")]
    DomainViolation(String),

    /// Requested operation is not defined for this symbol kind.
    #[error("unsupported for this symbol kind: {0}")]
    Unsupported(String),

    /// Grid size exceeds the dense-assembly cap.
    #[error("grid size {n} exceeds dense cap {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    /// A matrix decomposition failed to converge.
    #[error("decomposition failure: {0}")]
    Decomposition(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature non-convergence: requested {requested:e}, achieved {achieved:e}")]
    QuadratureNonConvergence { requested: f64, achieved: f64 },

    /// Level-set extraction produced no points.
    #[error("empty level set at t = {0}")]
    EmptyLevelSet(f64),

    /// A sweep or fit had no usable data points.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
