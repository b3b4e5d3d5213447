use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("degenerate taper: {0}")]
    DegenerateTaper(String),

    #[error(
        "circulant embedding failed: minimum eigenvalue {min_eigenvalue:e} below tolerance \
         (maximum eigenvalue {max_eigenvalue:e}, embedding size {size})"
    )]
    CirculantEmbedding {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        size: usize,
    },

    #[error("model `{0}` is not Gaussian; the pair-partition oracle does not apply")]
    NonGaussian(String),

    #[error("model `{0}` carries no fourth-order innovation cumulant")]
    MissingTrispectrum(String),

    #[error("{what} exceeds the enumeration limit ({limit})")]
    SizeGuard { what: String, limit: usize },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {0:e}")]
    NotPositiveSemidefinite(f64),

    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {0:e}")]
    NotHermitian(f64),

    #[error("invalid experiment config: {0}")]
    Config(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
