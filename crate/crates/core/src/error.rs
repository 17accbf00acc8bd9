use thiserror::Error;

/// Errors raised by the arithmetic, combinatorial and evaluation layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("conductor mismatch: {left} vs {right}")]
    ConductorMismatch { left: u64, right: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent {t} is not coprime to the conductor {c}")]
    NotCoprime { t: i64, c: u64 },
    #[error("prime {p} divides the conductor {c}")]
    PrimeDividesConductor { p: u64, c: u64 },
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("p = 2 is not supported: the convergence disc convention for p = 2 (q = 4) is not implemented")]
    UnsupportedPrime,
    #[error("prime mismatch: {left} vs {right}")]
    PrimeMismatch { left: u64, right: u64 },
    #[error("element is not a p-adic unit")]
    NotAUnit,
    #[error("element is not congruent to 1 modulo p")]
    NotPrincipalUnit,
    #[error("exponent lies outside the convergence disc |s|_p <= p^(-1/(p-1))")]
    OutsideConvergenceDisc,
    #[error("invalid partition triple: {0}")]
    InvalidPartition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("feasibility guard fired: {0}")]
    Infeasible(String),
    #[error("singular linear system")]
    SingularSystem,
    #[error("insufficient precision: {0}")]
    Precision(String),
}

pub type Result<T> = std::result::Result<T, Error>;
