use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("position ({x}, {y}) is outside the mapped area")]
    OutOfBounds { x: f64, y: f64 },

    #[error("beam index {beam} out of range (codebook has {n_beams} beams)")]
    BeamIndex { beam: usize, n_beams: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("REM has no tile with RSRP known for every beam")]
    EmptyRem,

    #[error("no RSRP data for tile ({x}, {y})")]
    MissingRsrp { x: u32, y: u32 },

    #[error("policy evaluation did not converge after {sweeps} sweeps (residual {residual:e})")]
    EvaluationDiverged { sweeps: usize, residual: f64 },

    #[error("policy iteration exceeded {rounds} improvement rounds")]
    PolicyIterationCap { rounds: usize },

    #[error("checksum mismatch: expected {expected}, found {found}")]
    ChecksumMismatch { expected: String, found: String },

    #[error("malformed {what} at line {line}: {msg}")]
    Parse {
        what: &'static str,
        line: usize,
        msg: String,
    },

    #[error("no samples to compute a percentile from")]
    EmptySamples,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(what: &'static str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what,
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. })
    }
}
