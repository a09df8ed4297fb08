use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed binary stream (truncated record, bad length).
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },

    /// Data that parsed but is not usable (NaN values and the like).
    #[error("data error: {0}")]
    Data(String),

    /// Missing or unexpected columns / fields.
    #[error("schema error: {0}")]
    Schema(String),

    /// A text row that could not be parsed.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Invalid run or training configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid scenario file.
    #[error("spec error in `{field}`: {message}")]
    Spec { field: String, message: String },

    /// Argument outside an operation's domain (shapes, ranges, signs).
    #[error("domain error: {0}")]
    Domain(String),

    /// Iterative numerical method failed.
    #[error("{method} did not converge after {iterations} iterations")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
    },

    /// System matrix singular at a frequency-grid point.
    #[error("system matrix is singular at omega = {omega} rad/s (resonance)")]
    Resonance { omega: f64 },

    /// Damping matrix not diagonalised by the undamped mode shapes.
    #[error("damping is not proportional: relative off-diagonal mass {ratio:.3e} exceeds {tolerance:.1e}")]
    NonProportionalDamping { ratio: f64, tolerance: f64 },

    /// Sampling rate too low for the configured excitation.
    #[error("aliasing: sample rate {sample_rate} Hz must exceed twice the highest excitation frequency {max_frequency} Hz")]
    Aliasing {
        sample_rate: f64,
        max_frequency: f64,
    },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Data(_)
                | Error::Schema(_)
                | Error::Parse { .. }
                | Error::Config(_)
                | Error::Spec { .. }
                | Error::Domain(_)
                | Error::Aliasing { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
