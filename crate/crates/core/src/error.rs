use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("overflow guard exceeded: |t|*||M|| = {scaled} > {limit}")]
    Range { scaled: f64, limit: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solution blew up at t = {t} (norm {norm:e}); last finite time {last_finite}")]
    BlowUp { t: f64, norm: f64, last_finite: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("bisection {bisection} and closed form {closed_form} disagree by more than {tolerance:e}")]
    SweepDisagreement { bisection: f64, closed_form: f64, tolerance: f64 },

    #[error("invalid spec: {0}")]
    Spec(String),
}
