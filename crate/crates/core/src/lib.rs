//! Visual speech recognition building blocks: lip segmentation and
//! feature extraction from mouth-region frames, frame classification into
//! phonemes or visemes, and word decoding with per-word discrete HMMs.

pub mod alignment;
pub mod classify;
pub mod hmm;
pub mod lexicon;
pub mod lip_extract;
pub mod pipeline;
pub mod seed;
