use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symplectic: residual {residual:.3e} exceeds {limit:.3e}")]
    Infeasible { residual: f64, limit: f64 },

    #[error("SR breakdown at column pair {pair}: |omega| = {omega:.3e} is below threshold {threshold:.3e}")]
    Breakdown {
        pair: usize,
        omega: f64,
        threshold: f64,
    },

    #[error("matrix is numerically rank deficient (sigma_min / sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotSpd { min_eig: f64 },

    #[error("Cayley transform is singular (condition estimate {cond:.3e})")]
    SingularCayley { cond: f64 },

    #[error("line search found no acceptable step after {backtracks} backtracks")]
    LineSearchFailed { backtracks: usize },

    #[error("DEIM selection became singular at column {column}")]
    SingularSelection { column: usize },

    #[error("Newton iteration failed at time step {step}: residual {residual:.3e}")]
    NewtonDivergence { step: usize, residual: f64 },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
