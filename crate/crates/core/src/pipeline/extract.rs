use std::collections::BTreeMap;

use rayon::prelude::*;

use super::io::{FeatureRow, LabelRow};
use super::{DatasetManifest, Mode, PipelineError, RunConfig};
use crate::alignment::{label_frames, Transcript};
use crate::classify::{
    coordinate_rows, evaluate_classifier, fit_svd, split, Classifier, ClassifyError, FeatureMatrix,
    FrameClassifier,
};
use crate::lexicon::{PronunciationDict, VisemeMap};
use crate::lip_extract::{extract_feature, ExtractError, ExtractorConfig, RasterFrame};
use crate::seed;

/// Extracted rows plus one message per frame that could not be processed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub rows: Vec<FeatureRow>,
    pub failures: Vec<String>,
}

fn extract_frame(
    manifest: &DatasetManifest,
    video: &super::VideoEntry,
    frame: usize,
    cfg: &ExtractorConfig,
    seed: u64,
) -> Result<Vec<f64>, ExtractError> {
    let raster = RasterFrame::load(&manifest.frame_path(video, frame))?;
    let roi = match video.roi {
        Some(r) => raster.crop(r)?,
        None => raster,
    };
    extract_feature(&roi, cfg, seed::derive_index(seed::derive(seed, &video.video_id), frame as u64))
}

/// Features for every frame of every video, sorted by video and frame.
/// Frames that fail are logged and skipped.
pub fn extract_features(manifest: &DatasetManifest, cfg: &ExtractorConfig, seed: u64) -> ExtractOutcome {
    let per_video: Vec<(Vec<FeatureRow>, Vec<String>)> = manifest
        .videos
        .par_iter()
        .map(|video| {
            let mut rows = Vec::new();
            let mut failures = Vec::new();
            for frame in 1..=manifest.frames_per_video {
                match extract_frame(manifest, video, frame, cfg, seed) {
                    Ok(values) => rows.push(FeatureRow {
                        video_id: video.video_id.clone(),
                        frame,
                        values,
                    }),
                    Err(e) => {
                        let msg = format!("{} frame {frame}: {e}", video.video_id);
                        log::warn!("{msg}");
                        failures.push(msg);
                    }
                }
            }
            (rows, failures)
        })
        .collect();
    let mut out = ExtractOutcome { rows: Vec::new(), failures: Vec::new() };
    for (rows, failures) in per_video {
        out.rows.extend(rows);
        out.failures.extend(failures);
    }
    out.rows.sort_by(|a, b| (&a.video_id, a.frame).cmp(&(&b.video_id, b.frame)));
    out
}

/// Ground-truth frame labels for every transcript, sorted by video.
pub fn align_videos(
    transcripts: &BTreeMap<String, Transcript>,
    dict: &PronunciationDict,
    map: &VisemeMap,
) -> Result<Vec<LabelRow>, PipelineError> {
    let mut rows = Vec::new();
    for (video_id, t) in transcripts {
        let labels = label_frames(t, dict, map)?;
        for (i, (&p, &v)) in labels.phonemes.iter().zip(&labels.visemes).enumerate() {
            rows.push(LabelRow {
                video_id: video_id.clone(),
                frame: i + 1,
                phoneme: p.index(),
                phoneme_label: map.phoneme_label(p).to_string(),
                viseme: v.index(),
                viseme_label: map.viseme_label(v).to_string(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub model: FrameClassifier,
    pub n_train: usize,
    pub n_test: usize,
    /// Held-out accuracy on the test part of the split.
    pub test_accuracy: f64,
}

/// Joins features with labels, splits, fits the SVD projection on the
/// training frames and trains the configured classifier on their
/// coordinates. The rank is lowered to what the data supports if needed.
pub fn train_frame_classifier(
    features: &[FeatureRow],
    labels: &[LabelRow],
    cfg: &RunConfig,
) -> Result<TrainedClassifier, PipelineError> {
    let by_frame: BTreeMap<(&str, usize), &LabelRow> =
        labels.iter().map(|l| ((l.video_id.as_str(), l.frame), l)).collect();
    let mut columns = Vec::new();
    let mut ids = Vec::new();
    let mut targets = Vec::new();
    for row in features {
        let Some(label) = by_frame.get(&(row.video_id.as_str(), row.frame)) else {
            log::warn!("no label for {} frame {}; skipped", row.video_id, row.frame);
            continue;
        };
        columns.push(row.values.clone());
        ids.push((row.video_id.clone(), row.frame));
        targets.push(match cfg.mode {
            Mode::Phoneme => label.phoneme,
            Mode::Viseme => label.viseme,
        });
    }
    let matrix = FeatureMatrix::from_columns(&columns, ids)?;
    let n = matrix.len();
    if n < 2 {
        return Err(PipelineError::Config("at least two labelled frames are needed".into()));
    }
    let (train, test) = split(n, cfg.split_fraction, seed::derive(cfg.seed, "classifier-split"));
    let train_x = matrix.values.select_columns(&train);
    let mut rank = cfg.svd_rank;
    let (projection, coords) = loop {
        match fit_svd(&train_x, rank, cfg.center) {
            Err(ClassifyError::RankTooLarge { requested, available }) if (1..requested).contains(&available) => {
                log::warn!("rank {requested} not supported by the data; using {available}");
                rank = available;
            }
            other => break other?,
        }
    };
    let train_coords = coordinate_rows(&coords);
    let train_labels: Vec<usize> = train.iter().map(|&i| targets[i]).collect();
    let classifier = Classifier::train(cfg.classifier, &train_coords, &train_labels, cfg.knn_k.min(train.len()))?;
    let model = FrameClassifier {
        alphabet_size: cfg.mode.alphabet_size(&cfg.viseme_map()),
        projection,
        classifier,
    };
    let all_coords: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| model.projection.project(c))
        .collect::<Result<_, _>>()?;
    let test_accuracy = evaluate_classifier(
        |x| model.classifier.predict(x).unwrap_or(0),
        &all_coords,
        &targets,
        &test,
    );
    Ok(TrainedClassifier {
        model,
        n_train: train.len(),
        n_test: test.len(),
        test_accuracy,
    })
}
