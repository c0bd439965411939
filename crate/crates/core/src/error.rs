use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("nu0/omega = {ratio} is not a positive integer (nu0^2/omega^2 must be a perfect square)")]
    NonIntegerRatio { ratio: f64 },

    #[error("drive strength |eps| = {eps} exceeds the perturbative limit 0.2")]
    DriveTooStrong { eps: f64 },

    #[error("first-order Floquet solution is singular at n = 1 with eps != 0 (parametric resonance)")]
    DegenerateOrder,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },

    #[error("positivity lost at t = {t}: smallest eigenvalue {min_eig} (increase the Fock cutoffs)")]
    PositivityLoss { t: f64, min_eig: f64 },

    #[error("cooling regime required: A-0 = {a_minus} <= A+0 = {a_plus} (heating)")]
    Heating { a_minus: f64, a_plus: f64 },

    #[error("covariance trace {trace} violates the uncertainty bound")]
    InvalidTrace { trace: f64 },

    #[error("trajectory spans {span} after the transient, need at least one period {period}")]
    InsufficientSpan { span: f64, period: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("index (n = {n}, j = {j}) does not fit in a {dim}-level Fock space")]
    IndexOutOfTruncation { n: usize, j: i64, dim: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
