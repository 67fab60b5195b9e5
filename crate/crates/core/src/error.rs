//! Error type shared by every module in the crate.

use std::fmt;
use std::io;
use std::path::Path;

/// Crate-wide error enum. Variants group failures by what the caller can do
/// about them: fix the call shapes, fix the configuration, fix the data, or
/// treat the run as numerically unusable.
#[derive(Debug)]
pub enum Error {
    /// Operand dimensions do not line up. The message names both shapes.
    Shape(String),
    /// A configuration value is out of its valid range.
    Config(String),
    /// Input data violates a documented invariant (empty set, class gap, ...).
    Data(String),
    /// A class label is outside `[0, num_classes)`.
    Label {
        index: usize,
        label: usize,
        num_classes: usize,
    },
    /// A text input failed to parse. `line` is 1-based.
    Parse { line: usize, message: String },
    /// A forward trace was used after the extractor parameters changed.
    StaleTrace,
    /// A numeric procedure failed (singular system, non-finite value, ...).
    Numeric(String),
    /// A metric was asked to score an input it is undefined on.
    Metric(String),
    /// An underlying I/O failure.
    Io(io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an I/O failure with the path it happened on, so callers see
    /// which file was involved.
    pub fn io_at(path: &Path, err: io::Error) -> Error {
        Error::Io(io::Error::new(
            err.kind(),
            format!("{}: {err}", path.display()),
        ))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Label {
                index,
                label,
                num_classes,
            } => write!(
                f,
                "label error: label {label} at row {index} outside [0, {num_classes})"
            ),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::StaleTrace => write!(
                f,
                "trace error: forward trace is stale (parameters changed since forward)"
            ),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::Metric(msg) => write!(f, "metric error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}
