use thiserror::Error;

/// Errors produced by the pruning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no samples")]
    NoSamples,

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid matrix data: {0}")]
    InvalidData(String),

    #[error("column count {0} is not divisible by 4")]
    NotCellAligned(usize),

    #[error("power iteration did not converge after {iterations} iterations (best estimate {estimate})")]
    EigenNotConverged { iterations: usize, estimate: f64 },

    #[error("cell solver hit {iterations} iterations without converging (residual {residual:e})")]
    SolverNotConverged {
        iterations: usize,
        residual: f64,
        last: [f64; 4],
    },

    #[error("no strictly feasible barrier start for lambda = {0}")]
    InfeasibleStart(f64),

    #[error("invalid regularizer pattern: N = {n}, M = {m}")]
    InvalidPattern { n: usize, m: usize },

    #[error("mean |W*| is zero; adaptive lambda undefined")]
    ZeroMeanWeights,

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("instance too large for exhaustive search: {0} cells per row (max 8)")]
    TooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown method: {0}")]
    UnknownMethod(String),

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("dimension overflow: {rows} x {cols}")]
    DimensionOverflow { rows: u64, cols: u64 },

    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
