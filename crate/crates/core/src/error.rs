use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("gauge violation: right-hand side carries {magnitude:e} on a null mode of the operator")]
    GaugeViolation { magnitude: f64 },

    #[error("invalid norm exponent q = {0} (need 2 <= q < inf)")]
    InvalidExponent(f64),

    #[error("barotropic constraint violated: vertically integrated divergence has size {0:e}")]
    BarotropicConstraint(f64),

    #[error("initial velocity has nonzero domain mean {0:e}")]
    NonzeroMean(f64),

    #[error("CFL violation at t = {time}: Courant number {courant:.4} exceeds {limit}; suggested dt = {suggested_dt:e}")]
    Cfl {
        time: f64,
        courant: f64,
        limit: f64,
        suggested_dt: f64,
    },

    #[error("non-finite values in the solution at t = {0}")]
    BlowUp(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rate fit impossible: {0}")]
    FitImpossible(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Cfl { .. } | Error::BlowUp(_))
    }
}
