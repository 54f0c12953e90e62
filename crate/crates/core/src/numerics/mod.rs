//! Dense linear algebra, fitting, and seeded randomness shared by the
//! diagnostics.

pub mod eigen;
pub mod fit;
pub mod matrix;
pub mod random;
pub mod timeseries;

pub use eigen::{eigh_real, eigh_selected, eigh_symmetric, eigvalsh_real, lowest_eigenpair, Spectrum};
pub use fit::{loglog_slope, polyfit, FitResult};
pub use matrix::{kron, pauli, ComplexMatrix, Matrix, RealMatrix, Scalar};
pub use random::{haar_qubit_unitary, seeded_rng, SeededRng};
pub use timeseries::TimeSeries;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not symmetric (defect {defect:e})")]
    NonSymmetric { defect: f64 },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
    #[error("eigenvalue index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("least-squares system is ill-conditioned (condition estimate {condition:e}); rescale the abscissa")]
    IllConditioned { condition: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("log-log fit requires positive data, got {value}")]
    NonPositiveInput { value: f64 },
}
