use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A probability, table row, or correlator failed a numerical check.
    #[error("validation: {0}")]
    Validation(String),

    /// A setting or hidden-variable value outside the model's domain.
    #[error("domain: {0}")]
    Domain(String),

    /// A run parameter (sample count, resolution, kappa grid, ...) is unusable.
    #[error("config: {0}")]
    Config(String),

    /// The rejection sampler exceeded its iteration cap.
    #[error("sampling: {0}")]
    Sampling(String),

    /// The requested operation does not exist for this model kind.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
