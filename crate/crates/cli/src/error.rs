use std::fmt;
use std::path::{Path, PathBuf};

use cloudbench::availability::AvailabilityError;
use cloudbench::elasticity::ElasticityError;
use cloudbench::isolation::IsolationError;
use cloudbench::risk::RiskError;
use cloudbench::simharness::SimError;
use cloudbench::TraceError;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input; exit code 2.
    Parse { path: PathBuf, line: Option<usize>, message: String },
    /// Input is well-formed but outside a metric's domain; exit code 3.
    Domain { context: String, message: String },
    /// Anything else; exit code 1.
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Domain { .. } => 3,
            CliError::Other(_) => 1,
        }
    }

    pub fn domain(context: impl Into<String>, err: impl fmt::Display) -> Self {
        CliError::Domain { context: context.into(), message: err.to_string() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Other(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { path, line: Some(line), message } => write!(f, "{}:{line}: {message}", path.display()),
            CliError::Parse { path, line: None, message } => write!(f, "{}: {message}", path.display()),
            CliError::Domain { context, message } => write!(f, "{context}: {message}"),
            CliError::Other(message) => f.write_str(message),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;

/// Trace errors raised while reading a file are parse errors; everything else the
/// owning module reports is a domain error.
pub trait InputError: fmt::Display {
    fn trace(&self) -> Option<&TraceError>;
}

macro_rules! input_error {
    ($($ty:ident),*) => {$(
        impl InputError for $ty {
            fn trace(&self) -> Option<&TraceError> {
                match self {
                    $ty::Trace(t) => Some(t),
                    _ => None,
                }
            }
        }
    )*};
}

input_error!(ElasticityError, IsolationError, AvailabilityError, RiskError, SimError);

impl InputError for TraceError {
    fn trace(&self) -> Option<&TraceError> {
        Some(self)
    }
}

pub fn reading<E: InputError>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| match e.trace() {
        Some(TraceError::Parse { line, message }) => {
            CliError::Parse { path: path.to_owned(), line: Some(*line), message: message.clone() }
        }
        Some(other) => CliError::Parse { path: path.to_owned(), line: None, message: other.to_string() },
        None => CliError::domain(path.display().to_string(), e),
    }
}

pub fn json(path: &Path, err: serde_json::Error) -> CliError {
    let line = (err.line() > 0).then_some(err.line());
    CliError::Parse { path: path.to_owned(), line, message: err.to_string() }
}
