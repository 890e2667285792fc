use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{op}: argument {value} is outside the domain")]
    Domain { op: &'static str, value: f64 },

    #[error("principal-value cutoff u_c = {u_c} must exceed 4x = {}", 4.0 * x)]
    CutoffTooSmall { u_c: f64, x: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("quadrature did not converge ({context}): estimate {value:e} with error {error:e}")]
    Quadrature { context: String, value: f64, error: f64 },

    #[error("resonance list is empty after removing the equilibrium mode")]
    EmptyResonanceList,

    #[error("the closed-form propagator needs qubit-symmetric couplings, got {0}")]
    NonSymmetricCouplings(String),

    #[error("indices ({m},{n}) are out of range for a {dim}-level system")]
    IndexOutOfRange { m: usize, n: usize, dim: usize },

    #[error("eigenvalue solver failed on matrix {0}")]
    EigenSolver(String),

    #[error("xi(rho) has eigenvalues with imaginary part {max_imag:e}; state is too far from positive")]
    ApproximationArtifact { max_imag: f64 },

    #[error("disentanglement bounds need {0}")]
    BoundsPrecondition(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Domain { .. } => "domain",
            Error::CutoffTooSmall { .. } => "cutoff_too_small",
            Error::Divergent(_) => "divergent",
            Error::Quadrature { .. } => "quadrature",
            Error::EmptyResonanceList => "empty_resonance_list",
            Error::NonSymmetricCouplings(_) => "non_symmetric_couplings",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EigenSolver(_) => "eigen_solver",
            Error::ApproximationArtifact { .. } => "approximation_artifact",
            Error::BoundsPrecondition(_) => "bounds_precondition",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
        }
    }
}
