use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("series or recursion did not reach tail tolerance {tol:e} within {cap} points")]
    Divergence { tol: f64, cap: usize },

    #[error("total masses differ ({left} vs {right}); Wasserstein distance is infinite")]
    MassMismatch { left: f64, right: f64 },

    #[error("{0} is not supported for this quantity")]
    UnsupportedKind(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("operator reads outside the valid window ({needed} > {available})")]
    WindowUnderflow { needed: i64, available: i64 },

    #[error("function is not centred under the reference measure (mean {0:e})")]
    NotCentered(f64),

    #[error("contraction constant {0} is not below 1")]
    NoContraction(f64),

    #[error("Neumann series did not converge within {0} terms")]
    NonConvergence(usize),

    #[error("infinite Bernoulli family declared without an analytic tail model")]
    TailModelMissing,

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("conditional law undefined: P(I_{0} = 1) = 0")]
    ZeroMarginal(usize),

    #[error("quadrature failed to converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
