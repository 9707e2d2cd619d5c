use thiserror::Error;

/// Errors raised by the quantization library.
///
/// The variants are grouped so that front-ends can map them onto distinct
/// exit statuses: configuration problems, numerical-tolerance failures and
/// the "moment problem has no solution" branch of question quantization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operator is not Hermitian (defect {defect:.3e} > {tol:.1e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("state is not normalized (norm {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("invalid generating operator: {0}")]
    InvalidGenerator(String),

    #[error("invalid POM: {0}")]
    InvalidPom(String),

    #[error("tail mass {mass:.3e} exceeds tolerance {tol:.1e} ({context})")]
    TailMass { mass: f64, tol: f64, context: String },

    #[error("numerical tolerance violated: {0}")]
    Numerical(String),

    /// No POM has the constant moment sequence: the operator is not an effect.
    #[error("spectrum [{min_eig:.6}, {max_eig:.6}] is not inside [0, 1]: the moment problem has no solution")]
    SpectrumOutsideUnitInterval { min_eig: f64, max_eig: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the command-line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TailMass { .. } | Error::Numerical(_) | Error::NotHermitian { .. } => 3,
            Error::SpectrumOutsideUnitInterval { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
