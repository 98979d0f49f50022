//! Error type shared by every module of the crate.

/// Failure modes of the numerical library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside the domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Physical or numerical parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Operation not available in the regime selected by gamma.
    #[error("regime error: {0}")]
    Regime(String),
    /// A coefficient that must be nonzero vanished.
    #[error("degenerate coefficient: {0}")]
    Degenerate(String),
    /// Amplitude equation has no solitary wave (sign condition violated).
    #[error("existence error: {0}")]
    Existence(String),
    /// The free surface touched the rod (1 + eta <= 0).
    #[error("geometry error: minimum of 1 + eta is {min_height:.3e}")]
    Geometry { min_height: f64 },
    /// Two fields or grids that must agree do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// The zero wavenumber was passed where it is excluded.
    #[error("singular mode: {0}")]
    SingularMode(String),
    /// An iteration stopped contracting.
    #[error("divergence after {iterations} iterations: {detail}")]
    Divergence { iterations: usize, detail: String },
    /// An iteration ran out of budget.
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    /// Non-finite values, failed brackets and similar numerical breakdowns.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
