use std::path::{Path, PathBuf};

use crate::lang::LexError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },
    #[error("unknown subject profile {0:?}")]
    UnknownProfile(String),
    #[error("lexical error: {0}")]
    Lex(#[from] LexError),
    #[error("function {name:?} not found")]
    FunctionNotFound { name: String },
    #[error("function {name:?} has {count} definitions")]
    AmbiguousFunction { name: String, count: usize },

    #[error("no manifest.json in {0}")]
    MissingManifest(PathBuf),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("{id}: dangling reference to {path}")]
    DanglingReference { id: String, path: PathBuf },
    #[error("unknown parent bug {0:?}")]
    UnknownParent(String),
    #[error("variant set for {parent}: {message}")]
    InvalidVariantSet { parent: String, message: String },
    #[error("work directory {0} is not empty")]
    WorkdirNotEmpty(PathBuf),
    #[error("{id}: invalid corpus entry: {reason}")]
    InvalidCorpusEntry { id: String, reason: String },

    #[error("rename spans overlap in {file} at byte {offset}")]
    SpanOverlap { file: PathBuf, offset: usize },
    #[error("function {function:?} is not eligible for renaming: {details}")]
    RenameHazard { function: String, details: String },
    #[error("rename plan incomplete, uncovered names: {}", .0.join(", "))]
    PartialPlan(Vec<String>),
    #[error("invalid rename plan: {0}")]
    InvalidPlan(String),

    #[error("empty solve vector")]
    EmptyVector,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("incomplete solve matrix, missing bugs: {}", .0.join(", "))]
    IncompleteRows(Vec<String>),
    #[error("metric sets differ")]
    MetricMismatch,

    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template:?} is missing slot {slot:?}")]
    MissingSlot { template: String, slot: String },
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("no transcript entry for request {key} ({template})")]
    TranscriptMiss { key: String, template: String },
    #[error("provider error after {attempts} attempt(s): {message}")]
    Provider { attempts: u32, message: String },
    #[error("unknown provider {0:?}")]
    UnknownProvider(String),
    #[error("missing credentials: environment variable {0} is not set")]
    MissingCredentials(String),

    #[error("unknown strategy {kind} {name:?}")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run {0:?} not found")]
    RunNotFound(String),
    #[error("ledger incomplete, missing: {}", .0.iter().map(|(b, v)| format!("{b}/{v}")).collect::<Vec<_>>().join(", "))]
    IncompleteLedger(Vec<(String, String)>),
    #[error("corpus lint failed for: {}", .0.join(", "))]
    LintFailed(Vec<String>),
    #[error("{0}")]
    Generation(String),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Stable, machine-parsable error class used on the command line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Format { .. } => "E_FORMAT",
            Error::UnknownProfile(_) => "E_UNKNOWN_PROFILE",
            Error::Lex(_) => "E_LEX",
            Error::FunctionNotFound { .. } => "E_FUNCTION_NOT_FOUND",
            Error::AmbiguousFunction { .. } => "E_AMBIGUOUS_FUNCTION",
            Error::MissingManifest(_) => "E_MISSING_MANIFEST",
            Error::DuplicateId(_) => "E_DUPLICATE_ID",
            Error::DanglingReference { .. } => "E_DANGLING_REFERENCE",
            Error::UnknownParent(_) => "E_UNKNOWN_PARENT",
            Error::InvalidVariantSet { .. } => "E_INVALID_VARIANT_SET",
            Error::WorkdirNotEmpty(_) => "E_WORKDIR_NOT_EMPTY",
            Error::InvalidCorpusEntry { .. } => "E_INVALID_CORPUS_ENTRY",
            Error::SpanOverlap { .. } => "E_SPAN_OVERLAP",
            Error::RenameHazard { .. } => "E_RENAME_HAZARD",
            Error::PartialPlan(_) => "E_PARTIAL_PLAN",
            Error::InvalidPlan(_) => "E_INVALID_PLAN",
            Error::EmptyVector => "E_EMPTY_VECTOR",
            Error::LengthMismatch { .. } => "E_LENGTH_MISMATCH",
            Error::IncompleteRows(_) => "E_INCOMPLETE_ROWS",
            Error::MetricMismatch => "E_METRIC_MISMATCH",
            Error::UnknownTemplate(_) => "E_UNKNOWN_TEMPLATE",
            Error::MissingSlot { .. } => "E_MISSING_SLOT",
            Error::InvalidRequest(_) => "E_INVALID_REQUEST",
            Error::TranscriptMiss { .. } => "E_TRANSCRIPT_MISS",
            Error::Provider { .. } => "E_PROVIDER",
            Error::UnknownProvider(_) => "E_UNKNOWN_PROVIDER",
            Error::MissingCredentials(_) => "E_MISSING_CREDENTIALS",
            Error::UnknownStrategy { .. } => "E_UNKNOWN_STRATEGY",
            Error::Config(_) => "E_CONFIG",
            Error::RunNotFound(_) => "E_RUN_NOT_FOUND",
            Error::IncompleteLedger(_) => "E_INCOMPLETE_LEDGER",
            Error::LintFailed(_) => "E_LINT_FAILED",
            Error::Generation(_) => "E_GENERATION",
        }
    }
}
