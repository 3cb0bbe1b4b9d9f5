use thiserror::Error;

use crate::concentration::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("matrix is not positive definite (leading minor {minor} has non-positive pivot)")]
    NotPositiveDefinite { minor: usize },

    #[error("invalid coloured graph: {0}")]
    InvalidGraph(String),

    #[error("invalid model space: {0}")]
    InvalidModelSpace(String),

    #[error("matrix does not lie in the model space (residual norm {residual:.3e})")]
    NotInModelSpace { residual: f64 },

    #[error(
        "estimating equations are singular: rank {rank} of {dim}, condition estimate {condition:.3e}"
    )]
    NotEstimable { rank: usize, dim: usize, condition: f64 },

    #[error("model space is not a Jordan subalgebra containing the identity")]
    NotJordan,

    #[error("Newton iterations did not converge after {iterations} steps (gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        best: Box<FitResult>,
    },

    #[error("likelihood appears unbounded above after {iterations} steps; the MLE does not exist")]
    MleNonexistent { iterations: usize },

    #[error("column {column} has zero variance")]
    DegenerateColumn { column: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::InvalidModelSpace(_) => "InvalidModelSpace",
            Error::NotInModelSpace { .. } => "NotInModelSpace",
            Error::NotEstimable { .. } => "NotEstimable",
            Error::NotJordan => "NotJordan",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::MleNonexistent { .. } => "MleNonexistent",
            Error::DegenerateColumn { .. } => "DegenerateColumn",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
