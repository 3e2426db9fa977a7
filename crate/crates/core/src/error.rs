use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Broad error classes, used by callers to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration.
    Usage,
    /// Input data violates a documented invariant.
    Data,
    /// Training or evaluation produced non-finite numbers.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown label name {0:?}")]
    UnknownLabel(String),
    #[error("exclusive label violated in segment {segment_id:?}: out-of-domain mixed with in-domain labels")]
    ExclusiveLabel { segment_id: String },
    #[error("duplicate {what} id {id:?}")]
    DuplicateId { what: &'static str, id: String },
    #[error("music posterior {value} of segment {segment_id:?} is outside (0, 1)")]
    MusicPosterior { segment_id: String, value: f64 },
    #[error("document {0:?} has no segments")]
    EmptyDocument(String),
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty effective vocabulary after token filtering")]
    EmptyVocabulary,
    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} documents, found {found}")]
    TooFewDocuments { needed: usize, found: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("undefined AP: no relevant items")]
    UndefinedAp,
    #[error("segment {doc_id}/{segment_id} missing from system output")]
    MissingSegment { doc_id: String, segment_id: String },
    #[error("segment {doc_id}/{segment_id} in system output is not in the reference corpus")]
    UnknownSegment { doc_id: String, segment_id: String },
    #[error("no training performed: epochs must be at least 1")]
    NoTrainingPerformed,
    #[error("training segment {0:?} is unlabeled")]
    UnlabeledSegment(String),
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("training set is empty")]
    EmptyTraining,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidSpec(_)
            | Error::InvalidParameter(_)
            | Error::RankOutOfRange { .. }
            | Error::NoTrainingPerformed => ErrorKind::Usage,
            Error::NonFinite(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}
