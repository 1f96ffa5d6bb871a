use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entry ({i},{j}) differs from its transpose by {delta:e}; not symmetric")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular within tolerance: eigenvalue {eigenvalue:e} too close to zero")]
    NearSingular { eigenvalue: f64 },

    #[error("hessian has negative eigenvalue {eigenvalue:e}; machines must be positive semi-definite")]
    NotPsd { eigenvalue: f64 },

    #[error("average hessian is not positive definite (lambda_min = {lambda_min:e})")]
    NotStronglyConvex { lambda_min: f64 },

    #[error("machine {label} has a singular hessian; its optimum is not unique")]
    AmbiguousOptimum { label: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("iterates diverged at round {round} (norm {norm:e})")]
    Divergence { round: usize, norm: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether this error class corresponds to a numerical failure (CLI exit code 3)
    /// rather than a usage problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NearSingular { .. }
                | Error::NotPsd { .. }
                | Error::NotStronglyConvex { .. }
                | Error::AmbiguousOptimum { .. }
                | Error::Divergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
