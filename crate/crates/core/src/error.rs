use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Validation(String),
    #[error("truncation overflow: order {order} exceeds N_max = {n_max}")]
    TruncationOverflow { order: usize, n_max: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("series unsafe: fitted C0 * eps_tilde = {0:.4} >= 0.9")]
    Divergence(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
