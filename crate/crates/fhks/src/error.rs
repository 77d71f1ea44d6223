use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum FhksError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid parameter {name}: {value} (legal range {range})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("restricted inverse applied to a field with nonzero mean (|mode-0 coeff| = {0:e})")]
    NonzeroMean(f64),

    #[error("dense oracle size cap exceeded: {cells} cells > {cap}")]
    OracleSizeCap { cells: usize, cap: usize },

    #[error("dense oracle requires discrete symbol mode")]
    OracleNeedsDiscrete,

    #[error("non-convex entropy rejected")]
    NonConvexEntropy,

    #[error("trajectory too short: {0} snapshots (need at least 3)")]
    TooFewSnapshots(usize),

    #[error("time step rejected {halvings} times at t = {t}; state min {u_min}, max {u_max}")]
    StepFailure {
        t: f64,
        halvings: u32,
        u_min: f64,
        u_max: f64,
    },

    #[error("Picard iteration is not contracting on horizon {horizon} (diff grew for {grew} consecutive iterations)")]
    NonContraction { horizon: f64, grew: u32 },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("config validation error: {0}")]
    ConfigValidation(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),
}

pub type Result<T> = std::result::Result<T, FhksError>;

impl FhksError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FhksError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code contract: 1 validation, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            FhksError::StepFailure { .. } | FhksError::NonContraction { .. } => 2,
            _ => 1,
        }
    }
}
