use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("containment violated: max residual {max_residual:e}")]
    Containment { max_residual: f64 },
    #[error("model error: {0}")]
    Model(String),
    #[error("internal consistency check `{check}` failed at index {index}: residual {residual:e}")]
    InternalConsistency {
        check: String,
        index: usize,
        residual: f64,
    },
    #[error("eigenpair residual {residual:e} exceeds tolerance {tol:e} (factor {factor})")]
    Eigen { factor: usize, residual: f64, tol: f64 },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
