use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate ({x}, {y}) lies outside [0,1]^2")]
    Domain { x: f64, y: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("brute-force cut norm limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("degenerate bipartite partition: n1 = {n1}, n2 = {n2}")]
    DegeneratePartition { n1: usize, n2: usize },

    #[error("hypothesis violated: min Q = {min_q} is not positive")]
    HypothesisViolation { min_q: f64 },

    #[error("frozen Jacobian is singular (condition estimate {cond:.3e}){hint}")]
    SingularJacobian { cond: f64, hint: &'static str },

    #[error("iteration diverged at step {iteration}: residual {residual:.3e}")]
    Divergence { iteration: usize, residual: f64 },

    #[error("eigenvalue iteration did not converge for a {n}x{n} matrix (1-norm {norm:.3e})")]
    EigenNonConvergence { n: usize, norm: f64 },

    #[error("gauge mode not found: {0}")]
    Gauge(String),

    #[error("state is not a steady state: residual {0:.3e}")]
    NotSteady(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
