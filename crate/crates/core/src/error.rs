use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("fractional order alpha = {0} must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("step index {m} out of range 1..={max}")]
    StepOutOfRange { m: usize, max: usize },

    #[error("history has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scheme `{scheme}` needs {what}, which the nonlinearity does not provide")]
    MissingDerivative { scheme: &'static str, what: &'static str },

    #[error("step condition violated at step {step}: kappa_mm = {kappa_mm} <= lambda = {lambda}")]
    StepCondition {
        step: usize,
        kappa_mm: f64,
        lambda: f64,
    },

    #[error("could not bracket the root after {0} expansions")]
    BracketFailure(usize),

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("fixed-point iteration stopped contracting at step {step} (distance {distance:e})")]
    ContractionFailure { step: usize, distance: f64 },

    #[error("singular tridiagonal system (zero pivot at row {0})")]
    SingularSystem(usize),

    #[error("value {value} is outside the range of the Kirchhoff transform")]
    OutOfRange { value: f64 },

    #[error("meshes are not a nested refinement pair")]
    NotNested,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
