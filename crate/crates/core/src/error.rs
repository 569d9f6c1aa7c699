use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight function has no positive mass on its support")]
    NonPositiveWeight,
    #[error("Lanczos recurrence broke down at step {step} (residual norm {residual:.3e})")]
    RecurrenceBreakdown { step: usize, residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("reduced density matrix requested for {modes} modes (limit is {limit})")]
    ModeCountTooLarge { modes: usize, limit: usize },
    #[error("Choi matrix at tau = {tau} has eigenvalue {min_eigenvalue:.3e}")]
    CpViolation { tau: f64, min_eigenvalue: f64 },
    #[error("dynamical map at tau = {tau} is singular (condition number {condition:.3e})")]
    SingularMap { tau: f64, condition: f64 },
    #[error("generator has a degenerate zero eigenvalue")]
    DegenerateFixedPoint,
    #[error("{0} did not converge inside the time window")]
    NotConverged(String),
    #[error("generator is not diagonalizable (eigenvector condition number {condition:.3e})")]
    NonDiagonalizable { condition: f64 },
    #[error("operator has vanishing trace")]
    ZeroTrace,
    #[error("initial state is not of product form: {0}")]
    NotProductForm(String),
    #[error("interacting systems are not supported (U = {0})")]
    UnsupportedInteraction(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
