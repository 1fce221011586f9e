use std::fmt;
use std::path::PathBuf;

use mleval_core::{Issue, IssueCode, ThresholdError, ValidationReport};

/// Position in an input file; line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read `{file}`: {source}")]
    Io {
        file: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{at}: {message}")]
    Syntax { at: Location, message: String },
    #[error("{file}: invalid manifest at line {line}, column {column}: {message}")]
    Manifest {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{at}: unknown label `{label}`")]
    UnknownLabel { at: Location, label: String },
    #[error("labels.txt: duplicate label `{name}` (lines {first} and {second})")]
    DuplicateLabel {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("labels.txt: no labels defined")]
    EmptyLabels,
    #[error("{at}: {source}")]
    Score {
        at: Location,
        #[source]
        source: ThresholdError,
    },
    #[error("unknown classifier run `{0}`")]
    UnknownRun(String),
    #[error("run `{0}` has hard labels; it has no scores to threshold")]
    NotScored(String),
    #[error("dataset failed validation with {} error(s)", .0.errors().count())]
    Invalid(ValidationReport),
}

impl IngestError {
    pub(crate) fn io(
        file: impl Into<String>,
        path: impl Into<PathBuf>,
        source: std::io::Error,
    ) -> Self {
        IngestError::Io {
            file: file.into(),
            path: path.into(),
            source,
        }
    }

    pub(crate) fn syntax(
        file: &str,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        IngestError::Syntax {
            at: Location {
                file: file.to_string(),
                line,
                column,
            },
            message: message.into(),
        }
    }

    /// Whether this is an environment failure rather than a problem with the
    /// dataset's content.
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::Io { .. })
    }

    /// The error as a validation report, for uniform reporting.
    pub fn to_report(&self) -> ValidationReport {
        let code = match self {
            IngestError::Invalid(report) => return report.clone(),
            IngestError::Io { .. } => IssueCode::Io,
            IngestError::Syntax { .. } => IssueCode::Syntax,
            IngestError::Manifest { .. } => IssueCode::Manifest,
            IngestError::UnknownLabel { .. } => IssueCode::UnknownLabel,
            IngestError::DuplicateLabel { .. } => IssueCode::DuplicateLabel,
            IngestError::EmptyLabels => IssueCode::EmptyRegistry,
            IngestError::Score { .. } => IssueCode::Score,
            IngestError::UnknownRun(_) | IngestError::NotScored(_) => IssueCode::Manifest,
        };
        Issue::error(code, self.to_string()).into()
    }
}
