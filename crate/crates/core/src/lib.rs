//! Core algorithms for ranking, confirming and cleaning data quality issues
//! in small image datasets.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! files, clocks, images or the network lives in the `dqclean` companion
//! crate; this crate works on in-memory values only:
//!
//! * [`data`]: manifests, embeddings and dense distance matrices.
//! * [`rank`]: per-noise-type candidate rankings (irrelevant samples, near
//!   duplicates, label errors).
//! * [`protocol`]: the annotation session state machine and its
//!   consecutive-negative stopping rule.
//! * [`aggregate`]: multi-annotator confirmation and cleaned file lists.
//! * [`stats`]: agreement coefficients, bootstrap intervals, permutation test.
//! * [`eval`]: ranking quality metrics and before/after cleaning deltas.
#![no_std]

extern crate alloc;

pub mod aggregate;
pub mod data;
pub mod eval;
pub mod protocol;
pub mod rank;
pub mod stats;

mod float;

pub use aggregate::{AggregationMode, CleanReport, ConfirmedSet, VerdictTable};
pub use data::{DatasetManifest, DistanceMatrix, EmbeddingMatrix, Metric, SampleRecord};
pub use protocol::{AnnotationSession, SessionEvent, SessionStatus, StoppingParams, Verdict};
pub use rank::{CandidateRef, IssueRanking, NoiseType};
