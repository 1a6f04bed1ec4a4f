use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected_tiers}x{expected_contents} policy, got {tiers}x{contents}")]
    DimensionMismatch {
        expected_tiers: usize,
        expected_contents: usize,
        tiers: usize,
        contents: usize,
    },

    /// `W_{i|j} = 0`: tier `i` never serves content `j`, so `R_{i|j}` has no law.
    #[error("serving distance undefined: tier {tier} never serves content {content}")]
    UndefinedDistribution { tier: usize, content: usize },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error estimate {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::Numerical(_))
    }
}
