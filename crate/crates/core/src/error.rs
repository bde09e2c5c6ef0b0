use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants split into two families that map onto CLI exit codes: input and
/// validation problems (exit 2) and numeric/runtime problems (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("duplicate material name {0:?}")]
    DuplicateMaterial(String),

    #[error("unknown material {0:?}")]
    UnknownMaterial(String),

    #[error("{field}: value {value} out of range ({expected})")]
    Range {
        field: String,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("scenario has no paths")]
    EmptyScenario,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("total internal reflection: (n1/n2)·sin(theta_i) = {0} > 1")]
    TotalInternalReflection(f64),

    #[error("observation direction lies on a shadow/reflection boundary pole (beta = {beta} rad)")]
    ShadowBoundaryPole { beta: f64 },

    #[error("relative difference undefined: zero reference value")]
    ZeroReference,

    #[error("antenna {antenna} has an all-zero impulse response")]
    AllZeroAntenna { antenna: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bad dataset magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported dataset version {found} (supported: {supported:?})")]
    UnsupportedVersion { found: u16, supported: &'static [u16] },

    #[error("truncated dataset: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    /// Parse error from serde_json with the position moved into `location`.
    pub(crate) fn json(location: impl Into<String>, e: &serde_json::Error) -> Self {
        let text = e.to_string();
        let message = match text.rsplit_once(" at line ") {
            Some((m, _)) if e.line() > 0 => m.to_string(),
            _ => text,
        };
        Error::Parse {
            location: location.into(),
            message,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the CLI: 2 for validation errors, 3 for
    /// numeric/runtime errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::DuplicateMaterial(_)
            | Error::UnknownMaterial(_)
            | Error::Range { .. }
            | Error::Validation(_)
            | Error::EmptyScenario
            | Error::EmptyInput(_)
            | Error::DimensionMismatch(_)
            | Error::BadMagic(_)
            | Error::UnsupportedVersion { .. }
            | Error::Truncated { .. } => 2,
            Error::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => 2,
            Error::TotalInternalReflection(_)
            | Error::ShadowBoundaryPole { .. }
            | Error::ZeroReference
            | Error::AllZeroAntenna { .. }
            | Error::NonFinite(_)
            | Error::Io { .. } => 3,
        }
    }
}
