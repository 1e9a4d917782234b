use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e}, allowed {allowed:.3e})")]
    NonHermitian { deviation: f64, allowed: f64 },

    #[error("eigenvalue solver did not converge for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("eigenvalue {eigenvalue:.3e} below the allowed floor -{floor:.1e}")]
    NegativeSpectrum { eigenvalue: f64, floor: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("trace has imaginary part {imag:.3e} (real part {real:.3e})")]
    ImagResidual { real: f64, imag: f64 },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("trace of A(s)^(1+s) is not positive ({0:.3e})")]
    NonpositiveTrace(f64),

    #[error("mixture A(s) is singular (min eigenvalue {0:.3e})")]
    SingularMixture(f64),

    #[error("A+B is singular (min eigenvalue {0:.3e})")]
    SingularSum(f64),

    #[error("state is singular (min eigenvalue {0:.3e})")]
    SingularState(f64),

    #[error("scalar inputs must be strictly positive")]
    NonpositiveInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sum of C_i^* C_i exceeds the identity (Loewner margin {0:.3e})")]
    ContractionViolation(f64),

    #[error("spectrum outside the function domain (min eigenvalue {0:.3e})")]
    DomainViolation(f64),

    #[error("unknown inequality '{0}'")]
    UnknownInequality(String),
}

impl Error {
    /// Short stable tag used when tallying skipped evaluations.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::NonHermitian { .. } => "NON_HERMITIAN",
            Error::EigenFailure { .. } => "EIGEN_FAILURE",
            Error::NegativeSpectrum { .. } => "NEGATIVE_SPECTRUM",
            Error::DimMismatch(..) => "DIM_MISMATCH",
            Error::ImagResidual { .. } => "IMAG_RESIDUAL",
            Error::InvalidMatrix(_) => "INVALID_MATRIX",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::InvalidEnsemble(_) => "INVALID_ENSEMBLE",
            Error::NonpositiveTrace(_) => "NONPOSITIVE_TRACE",
            Error::SingularMixture(_) => "SINGULAR_MIXTURE",
            Error::SingularSum(_) => "SINGULAR_SUM",
            Error::SingularState(_) => "SINGULAR_STATE",
            Error::NonpositiveInput => "NONPOSITIVE_INPUT",
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::ContractionViolation(_) => "CONTRACTION_VIOLATION",
            Error::DomainViolation(_) => "DOMAIN_VIOLATION",
            Error::UnknownInequality(_) => "UNKNOWN_INEQUALITY",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
