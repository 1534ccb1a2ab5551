use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("negative multiplier {value} at index {index}")]
    NegativeMultiplier { index: usize, value: f64 },

    #[error("fixed-point bracket failed: F(0) = {f_low}, F(h(alpha)) = {f_high}")]
    Bracket { f_low: f64, f_high: f64 },

    #[error("search space too large: {words} words exceeds the limit of {limit}")]
    SearchGuard { words: u64, limit: u64 },

    #[error("code is not constant-weight")]
    NotConstantWeight,

    #[error("invalid code: {0}")]
    InvalidCode(String),
}
