use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample not saturated: H0 = {h0} T must exceed Ms/3 = {limit} T")]
    Unsaturated { h0: f64, limit: f64 },

    #[error("frequency {f} GHz outside the Walker band ({low}, {high}) GHz")]
    OutOfBand { f: f64, low: f64, high: f64 },

    #[error("Legendre argument out of domain: {0}")]
    Domain(String),

    #[error("bisection did not converge in {iterations} iterations on [{lo}, {hi}] GHz")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("field {field} T sits on the accumulation point {pole} T")]
    Singular { field: f64, pole: f64 },

    #[error("degenerate field grid: {0}")]
    DegenerateGrid(String),

    #[error("splitting needs exactly 2 peaks, found {0}")]
    PeakCount(usize),

    #[error("least-squares problem is rank deficient: {0}")]
    RankDeficient(String),

    #[error("not enough oscillation in the ringdown: {0}")]
    InsufficientOscillation(String),

    #[error("pulse-off tail too short: {0}")]
    InsufficientTail(String),

    #[error("integration step {step_ps} ps too coarse: {reason}")]
    Unstable { step_ps: f64, reason: String },

    #[error("{what} = {value} lies outside the axis [{min}, {max}]")]
    OutOfAxis {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("unknown configuration key: {0}")]
    UnknownKey(String),

    #[error("configuration parse error: {0}")]
    ConfigParse(String),

    #[error("ragged grid: no sample at H = {field} T, f = {freq}")]
    RaggedGrid { field: f64, freq: f64 },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad inputs (configuration, files) rather than by a
    /// numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::UnknownKey(_)
                | Error::ConfigParse(_)
                | Error::RaggedGrid { .. }
                | Error::Parse { .. }
                | Error::Io { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Unsaturated { .. } => "unsaturated",
            Error::OutOfBand { .. } => "out-of-band",
            Error::Domain(_) => "domain",
            Error::NoConvergence { .. } => "no-convergence",
            Error::Singular { .. } => "singular",
            Error::DegenerateGrid(_) => "degenerate-grid",
            Error::PeakCount(_) => "peak-count",
            Error::RankDeficient(_) => "rank-deficient",
            Error::InsufficientOscillation(_) => "insufficient-oscillation",
            Error::InsufficientTail(_) => "insufficient-tail",
            Error::Unstable { .. } => "unstable",
            Error::OutOfAxis { .. } => "out-of-axis",
            Error::Invalid { .. } => "invalid",
            Error::UnknownKey(_) => "unknown-key",
            Error::ConfigParse(_) => "config-parse",
            Error::RaggedGrid { .. } => "ragged-grid",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
