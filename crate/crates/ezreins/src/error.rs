use thiserror::Error;

/// Errors raised by the solvers, verifiers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("denominator of k vanishes (|den| = {denominator:e}); the closed form does not exist")]
    DegenerateK { denominator: f64 },

    #[error("complex discriminant: {what} = {value:e} < 0")]
    ComplexDiscriminant { what: &'static str, value: f64 },

    #[error("EIS within 1e-9 of one (phi = {phi}); use the unit-EIS solver")]
    UnitEisRequired { phi: f64 },

    #[error("quadrature budget exceeded on [{lo}, {hi}]: error estimate {estimate:e} after {subdivisions} subdivisions")]
    QuadratureBudgetExceeded {
        lo: f64,
        hi: f64,
        estimate: f64,
        subdivisions: usize,
    },

    #[error("wealth must be positive, got {0}")]
    NonpositiveWealth(f64),

    #[error("value level {0} is not admissible: (1 - gamma) v must be positive")]
    NonadmissibleValueSign(f64),

    #[error("time {t} lies outside [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("fixed point for w did not converge after {iterations} iterations (last step {last_step:e})")]
    FixedPointDivergence { iterations: usize, last_step: f64 },

    #[error("finite-difference scheme unstable: {0}")]
    StabilityViolation(String),

    #[error("singular tridiagonal system at row {row}")]
    SingularLinearSystem { row: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
