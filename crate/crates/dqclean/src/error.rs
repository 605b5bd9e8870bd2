use std::io;
use std::path::{Path, PathBuf};

use dqclean_core::aggregate::AggregateError;
use dqclean_core::data::DataError;
use dqclean_core::eval::EvalError;
use dqclean_core::protocol::ProtocolError;
use dqclean_core::rank::{NoiseType, RankError};
use dqclean_core::stats::StatsError;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: row {row} has id `{found}`, manifest expects `{expected}`")]
    IdMismatch { path: PathBuf, row: usize, expected: String, found: String },
    #[error("image for sample `{id}` not found at {path}")]
    MissingImage { id: String, path: PathBuf },
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error(
        "{path}: corrupt event log at byte {offset}: {reason}; \
         truncate the file to {offset} bytes to drop the damaged tail, then restart"
    )]
    CorruptLog { path: PathBuf, offset: u64, reason: String },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("dataset `{0}` is already registered")]
    DatasetExists(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` already exists")]
    SessionExists(String),
    #[error("dataset `{dataset}` has no {noise_type} ranking; rank it first")]
    RankingMissing { dataset: String, noise_type: NoiseType },
    #[error("the {noise_type} ranking of `{dataset}` is in use by sessions and cannot be recomputed")]
    RankingLocked { dataset: String, noise_type: NoiseType },
    #[error("unknown sample id `{0}`")]
    UnknownId(String),
    #[error("invalid name `{0}`: use letters, digits, `.`, `_` or `-`")]
    InvalidName(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Coarse category used to pick a transport status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Invalid,
    NotFound,
    Conflict,
    Internal,
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::Parse { .. } => "ParseError",
            Error::Format { .. } => "FormatError",
            Error::IdMismatch { .. } => "IdMismatch",
            Error::MissingImage { .. } => "MissingImage",
            Error::Decode { .. } => "DecodeError",
            Error::CorruptLog { .. } => "CorruptLog",
            Error::UnknownDataset(_) => "UnknownDataset",
            Error::DatasetExists(_) => "DatasetExists",
            Error::UnknownSession(_) => "UnknownSession",
            Error::SessionExists(_) => "SessionExists",
            Error::RankingMissing { .. } => "RankingMissing",
            Error::RankingLocked { .. } => "RankingLocked",
            Error::UnknownId(_) => "UnknownId",
            Error::InvalidName(_) => "InvalidName",
            Error::InvalidRequest(_) => "InvalidRequest",
            Error::Data(e) => match e {
                DataError::DuplicateId(_) => "DuplicateId",
                DataError::EmptyPath(_) => "EmptyPath",
                DataError::EmptyId => "EmptyId",
                DataError::EmptyManifest(_) => "EmptyManifest",
                DataError::ShapeMismatch { .. } => "ShapeMismatch",
                DataError::BufferSize { .. } => "BufferSize",
                DataError::NonFiniteValue { .. } => "NonFiniteValue",
                DataError::ZeroVector(_) => "ZeroVector",
                DataError::UnknownMetric(_) => "UnknownMetric",
                DataError::InvalidDistance { .. } => "InvalidDistance",
                DataError::InvalidResize { .. } => "InvalidResize",
            },
            Error::Rank(e) => match e {
                RankError::TooFewSamples(_) => "TooFewSamples",
                RankError::DegenerateDistances => "DegenerateDistances",
                RankError::SingleClass => "SingleClass",
                RankError::MissingLabel(_) => "MissingLabel",
                RankError::LabelCount { .. } => "LabelCount",
                RankError::InvalidK => "InvalidK",
                RankError::UnknownNoiseType(_) => "UnknownNoiseType",
            },
            Error::Protocol(e) => match e {
                ProtocolError::OutOfRange { .. } => "OutOfRange",
                ProtocolError::EmptyRanking => "EmptyRanking",
                ProtocolError::StaleCandidate { .. } => "StaleCandidate",
                ProtocolError::SessionTerminated(_) => "SessionTerminated",
                ProtocolError::AmendmentUnsupported => "AmendmentUnsupported",
                ProtocolError::EmptyGrid => "EmptyGrid",
                ProtocolError::MissingStart => "MissingStart",
                ProtocolError::UnexpectedStart => "UnexpectedStart",
                ProtocolError::RankingMismatch(_) => "RankingMismatch",
                ProtocolError::InconsistentStop { .. } => "InconsistentStop",
            },
            Error::Aggregate(e) => match e {
                AggregateError::NoAnnotators => "NoAnnotators",
                AggregateError::MixedNoiseTypes(..) => "MixedNoiseTypes",
                AggregateError::UnknownId(_) => "UnknownId",
                AggregateError::SelfPair(_) => "SelfPair",
                AggregateError::UnknownMode(_) => "UnknownMode",
            },
            Error::Stats(e) => stats_code(e),
            Error::Eval(e) => match e {
                EvalError::SingleClass => "SingleClass",
                EvalError::NoPositives => "NoPositives",
                EvalError::DuplicateId(_) => "DuplicateId",
                EvalError::NonFiniteScore(_) => "NonFiniteScore",
                EvalError::UnknownId(_) => "UnknownId",
                EvalError::UnknownCandidate(_) => "UnknownCandidate",
                EvalError::EmptyAfterCleaning => "EmptyAfterCleaning",
                EvalError::Stats(s) => stats_code(s),
            },
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } | Error::CorruptLog { .. } => ErrorClass::Internal,
            Error::UnknownDataset(_) | Error::UnknownSession(_) | Error::RankingMissing { .. } => ErrorClass::NotFound,
            Error::DatasetExists(_) | Error::SessionExists(_) | Error::RankingLocked { .. } => ErrorClass::Conflict,
            Error::Protocol(ProtocolError::StaleCandidate { .. } | ProtocolError::SessionTerminated(_)) => {
                ErrorClass::Conflict
            }
            _ => ErrorClass::Invalid,
        }
    }
}

fn stats_code(e: &StatsError) -> &'static str {
    match e {
        StatsError::LengthMismatch(..) => "LengthMismatch",
        StatsError::EmptyInput => "EmptyInput",
        StatsError::DegenerateMarginals => "DegenerateMarginals",
        StatsError::InsufficientPairableValues => "InsufficientPairableValues",
        StatsError::ZeroExpectedDisagreement => "ZeroExpectedDisagreement",
        StatsError::OutOfRange { .. } => "OutOfRange",
        StatsError::AllReplicatesDegenerate => "AllReplicatesDegenerate",
        StatsError::DegeneratePoint => "DegeneratePoint",
        StatsError::ZeroAnnotated => "ZeroAnnotated",
        StatsError::AnnotatedExceedsPool { .. } => "AnnotatedExceedsPool",
    }
}
