use std::collections::BTreeMap;

use rayon::prelude::*;

use super::io::FeatureRow;
use super::PipelineError;
use crate::alignment::Transcript;
use crate::classify::{ClassifyError, FrameClassifier};

/// Per-frame symbols of one video, in frame order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifiedSequence {
    pub video_id: String,
    pub symbols: Vec<usize>,
}

/// Labels every frame and assembles one sequence per video, sorted by
/// video id. Row order in the input does not matter.
pub fn classify_videos(
    rows: &[FeatureRow],
    model: &FrameClassifier,
    frames_per_video: usize,
) -> Result<Vec<ClassifiedSequence>, PipelineError> {
    let mut videos: BTreeMap<&str, Vec<&FeatureRow>> = BTreeMap::new();
    for row in rows {
        if row.values.len() != model.dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: model.dim(),
                found: row.values.len(),
            }
            .into());
        }
        videos.entry(&row.video_id).or_default().push(row);
    }
    videos
        .into_par_iter()
        .map(|(video_id, mut frames)| {
            frames.sort_by_key(|r| r.frame);
            frames.dedup_by_key(|r| r.frame);
            let complete = frames.len() == frames_per_video
                && frames.iter().enumerate().all(|(i, r)| r.frame == i + 1);
            if !complete {
                return Err(PipelineError::MissingFrames {
                    video_id: video_id.to_string(),
                    found: frames.iter().filter(|r| (1..=frames_per_video).contains(&r.frame)).count(),
                    expected: frames_per_video,
                });
            }
            let symbols = frames
                .iter()
                .map(|r| model.predict(&r.values))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ClassifiedSequence { video_id: video_id.to_string(), symbols })
        })
        .collect()
}

/// Cuts each transcript interval out of its video's sequence and groups
/// the pieces by word, in video then frame order.
pub fn bin_sort(
    sequences: &[ClassifiedSequence],
    transcripts: &BTreeMap<String, Transcript>,
) -> Result<BTreeMap<String, Vec<Vec<usize>>>, PipelineError> {
    let mut ordered: Vec<&ClassifiedSequence> = sequences.iter().collect();
    ordered.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    let mut out: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
    for seq in ordered {
        let t = transcripts
            .get(&seq.video_id)
            .ok_or_else(|| PipelineError::MissingTranscript(seq.video_id.clone()))?;
        for iv in &t.intervals {
            let Some(piece) = seq.symbols.get(iv.range()) else {
                return Err(PipelineError::MissingFrames {
                    video_id: seq.video_id.clone(),
                    found: seq.symbols.len(),
                    expected: iv.end_frame,
                });
            };
            out.entry(iv.word.clone()).or_default().push(piece.to_vec());
        }
    }
    Ok(out)
}
