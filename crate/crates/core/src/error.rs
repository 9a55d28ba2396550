use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Majorana index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("cell index {index} out of range 1..={n_cells}")]
    CellOutOfRange { index: usize, n_cells: usize },

    #[error("register size mismatch: {left} vs {right} cells")]
    DimensionMismatch { left: usize, right: usize },

    #[error("algebra violation: {0}")]
    AlgebraViolation(String),

    #[error("{n_cells} cells exceeds the dense cap of {cap}")]
    ResourceLimit { n_cells: usize, cap: usize },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("Bhatia-Davis violated: slack {slack:e} (variance {variance:e})")]
    InequalityViolation { slack: f64, variance: f64 },

    #[error("work curve never charges")]
    NoCharging,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("record schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sweep failed: {failed} of {total} realizations errored")]
    SweepFailed { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
