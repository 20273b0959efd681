//! Batch orchestration over the other modules: manifests, CSV artifacts,
//! feature extraction, frame classification, bin-sorting, per-word HMM
//! evaluation, synthetic corpora and report rendering.

mod config;
mod evaluate;
mod extract;
pub mod io;
mod manifest;
mod sequences;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

use crate::alignment::AlignError;
use crate::classify::ClassifyError;
use crate::hmm::HmmError;
use crate::lexicon::LexiconError;
use crate::lip_extract::ExtractError;

pub use config::{Mode, RunConfig, Subset};
pub use evaluate::{evaluate, evaluate_with_hook, report_render, EvalReport, EvalRow, ReportFormat};
pub use extract::{align_videos, extract_features, train_frame_classifier, ExtractOutcome, TrainedClassifier};
pub use io::{FeatureRow, LabelRow};
pub use manifest::{DatasetManifest, VideoEntry};
pub use sequences::{bin_sort, classify_videos, ClassifiedSequence};
pub use synth::{synth_generate, SynthCorpus, SynthSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("video {video_id} has {found} of {expected} frames")]
    MissingFrames {
        video_id: String,
        found: usize,
        expected: usize,
    },
    #[error("no transcript for video {0}")]
    MissingTranscript(String),
    #[error("word {0:?} has no sequences")]
    UnknownWord(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
}
