//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::edf_io::Region;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed EDF input. `offset` is the byte position of the offending field.
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    /// Malformed CSV input. `line` is 1-based and counts the header.
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: u64, reason: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("channel {0:?} does not map to any brain region")]
    UnmappedChannel(String),

    #[error("operation needs at least {needed} channels, got {got}")]
    InsufficientChannels { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidSpec(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("covariance rank {rank} is below the requested {k} components")]
    RankDeficient { rank: usize, k: usize },

    #[error("every ICA component was marked for rejection")]
    AllComponentsRejected,

    #[error("band [{low_hz}, {high_hz}] Hz lies outside [0, {nyquist_hz}) Hz")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        nyquist_hz: f64,
    },

    #[error("no channels for region(s) {0:?}")]
    MissingRegion(Vec<Region>),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(
        "threshold {threshold} unreachable: accepted {accepted}/{required} after {candidates_tried} candidates \
         (acceptance rate {acceptance_rate:.4}, best score {best_score:.4})"
    )]
    ThresholdUnreachable {
        threshold: f64,
        accepted: usize,
        required: usize,
        candidates_tried: usize,
        acceptance_rate: f64,
        best_score: f64,
    },

    #[error("labels hold a single class; at least two are required")]
    DegenerateLabels,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("training diverged (non-finite loss) in epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2: input or parse problem, 3: a statistical precondition failed,
    /// 4: the synthesis budget ran out or training diverged.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::CsvParse { .. }
            | Error::UnsupportedFormat(_)
            | Error::UnmappedChannel(_)
            | Error::InvalidSpec(_)
            | Error::SchemaMismatch(_)
            | Error::Io { .. }
            | Error::Json(_) => 2,
            Error::InsufficientChannels { .. }
            | Error::EmptyResult(_)
            | Error::RankDeficient { .. }
            | Error::AllComponentsRejected
            | Error::InvalidBand { .. }
            | Error::MissingRegion(_)
            | Error::DegenerateInput(_)
            | Error::InsufficientData(_)
            | Error::DegenerateLabels => 3,
            Error::ThresholdUnreachable { .. } | Error::TrainingDiverged { .. } => 4,
        }
    }
}
