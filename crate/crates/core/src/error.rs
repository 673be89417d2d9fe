use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter `{name}` has invalid value {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("state entry {index} diverged to {value}")]
    Diverged { index: usize, value: f64 },

    #[error("matrix is not Hurwitz: max real eigenvalue part {max_real}")]
    NotHurwitz { max_real: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("effectiveness matrix does not have full row rank")]
    RankDeficient,

    #[error("actuator normalization matrix is singular at entry {index}")]
    NonInvertible { index: usize },

    #[error("linearization speed must be positive, got {0}")]
    InvalidOperatingPoint(f64),

    #[error("closed-loop assembly is singular")]
    SingularClosedLoop,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = core::result::Result<T, Error>;
