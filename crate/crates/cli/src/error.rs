//! Error taxonomy shared by the command line and the HTTP service.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use trustmap::document::{to_document_string, DocumentError, ErrorBody, ErrorDocument};
use trustmap::{FcmError, FuzzyError, RuleError, TrustError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad user input: malformed documents, unknown labels, invalid models.
    #[error("{message}")]
    Input {
        code: &'static str,
        message: String,
        details: Vec<String>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn input(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Input {
            code,
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn with_details(mut self, extra: Vec<String>) -> Self {
        if let CliError::Input { details, .. } = &mut self {
            details.extend(extra);
        }
        self
    }

    /// Prefix the message with the file or request part it came from.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            CliError::Input {
                code,
                message,
                details,
            } => CliError::Input {
                code,
                message: format!("{what}: {message}"),
                details,
            },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => EXIT_INPUT,
            CliError::Io { .. } => EXIT_IO,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Input { code, .. } => code,
            CliError::Io { .. } => "io",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn details(&self) -> &[String] {
        match self {
            CliError::Input { details, .. } => details,
            _ => &[],
        }
    }

    pub fn to_document(&self) -> ErrorDocument {
        ErrorDocument {
            error: ErrorBody {
                code: self.code().to_string(),
                message: self.to_string(),
                details: self.details().to_vec(),
            },
        }
    }

    pub fn to_document_string(&self) -> String {
        to_document_string(&self.to_document())
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        let code = match &e {
            DocumentError::Json(_) => "malformed-document",
            DocumentError::Version { .. } => "unsupported-version",
            DocumentError::Kind { .. } => "wrong-kind",
            DocumentError::Content { .. } => "invalid-content",
            DocumentError::Label { .. } => "unknown-label",
        };
        CliError::input(code, e.to_string())
    }
}

impl From<FuzzyError> for CliError {
    fn from(e: FuzzyError) -> Self {
        let code = match &e {
            FuzzyError::UnknownLabel { .. } => "unknown-label",
            _ => "invalid-scale",
        };
        CliError::input(code, e.to_string())
    }
}

impl From<FcmError> for CliError {
    fn from(e: FcmError) -> Self {
        match e {
            FcmError::InvalidModel(violations) => CliError::input(
                "invalid-model",
                format!("model rejected with {} violation(s)", violations.len()),
            )
            .with_details(violations.iter().map(ToString::to_string).collect()),
            FcmError::InvalidConfig(_) => CliError::input("invalid-config", e.to_string()),
            FcmError::DimensionMismatch { .. } | FcmError::InitialOutOfRange { .. } => {
                CliError::input("invalid-state", e.to_string())
            }
        }
    }
}

impl From<TrustError> for CliError {
    fn from(e: TrustError) -> Self {
        match e {
            TrustError::Label { .. } => CliError::input("unknown-label", e.to_string()),
            TrustError::MalformedSurvey { .. } => CliError::input("malformed-survey", e.to_string()),
            TrustError::Fcm(inner) => inner.into(),
            TrustError::OutOfRange(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<RuleError> for CliError {
    fn from(e: RuleError) -> Self {
        let code = match &e {
            RuleError::Syntax { .. } => "rule-syntax",
            RuleError::MissingDefault => "missing-default",
            RuleError::MissingFeature { .. } => "missing-feature",
            RuleError::DuplicateFeature { .. } | RuleError::Records { .. } => "invalid-records",
            _ => "invalid-rules",
        };
        CliError::input(code, e.to_string())
    }
}

/// Collapse a survey's validation errors into one input error listing all of them.
pub fn survey_errors(errors: Vec<TrustError>) -> Option<CliError> {
    let first = errors.first()?;
    let code = match first {
        TrustError::Label { .. } => "unknown-label",
        _ => "malformed-survey",
    };
    let message = if errors.len() == 1 {
        first.to_string()
    } else {
        format!("{} (and {} more problem(s))", first, errors.len() - 1)
    };
    Some(CliError::input(code, message).with_details(errors.iter().map(ToString::to_string).collect()))
}
