//! Transcript parsing and per-frame phoneme/viseme labelling.
//!
//! Transcript files use 1-based inclusive frame intervals; everything in
//! memory past the parser is 0-based.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::lexicon::{content_lines, PhonemeId, PronunciationDict, VisemeId, VisemeMap, SILENCE};

pub const DEFAULT_TOTAL_FRAMES: usize = 74;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("interval for {second:?} overlaps the one for {first:?}")]
    OverlappingIntervals { first: String, second: String },
    #[error("interval for {word:?} ({start}..={end}) is outside frames 1..={total}")]
    IntervalOutOfRange {
        word: String,
        start: usize,
        end: usize,
        total: usize,
    },
    #[error("unknown word {word:?} in video {video_id}")]
    UnknownWord { word: String, video_id: String },
    #[error("frame {frame} of video {video_id} is outside every word and silence is disabled")]
    UncoveredFrame { video_id: String, frame: usize },
}

/// One spoken word and its frames, 1-based inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordInterval {
    pub word: String,
    pub start_frame: usize,
    pub end_frame: usize,
}

impl WordInterval {
    pub fn len(&self) -> usize {
        self.end_frame + 1 - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// 0-based half-open frame range.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start_frame - 1..self.end_frame
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub video_id: String,
    pub intervals: Vec<WordInterval>,
    pub total_frames: usize,
}

impl Transcript {
    /// Validates ordering, overlap and range; intervals are sorted by start.
    pub fn new(
        video_id: impl Into<String>,
        mut intervals: Vec<WordInterval>,
        total_frames: usize,
    ) -> Result<Self, AlignError> {
        intervals.sort_by_key(|iv| iv.start_frame);
        for iv in &intervals {
            if iv.start_frame < 1 || iv.end_frame > total_frames || iv.start_frame > iv.end_frame {
                return Err(AlignError::IntervalOutOfRange {
                    word: iv.word.clone(),
                    start: iv.start_frame,
                    end: iv.end_frame,
                    total: total_frames,
                });
            }
        }
        for pair in intervals.windows(2) {
            if pair[1].start_frame <= pair[0].end_frame {
                return Err(AlignError::OverlappingIntervals {
                    first: pair[0].word.clone(),
                    second: pair[1].word.clone(),
                });
            }
        }
        Ok(Self {
            video_id: video_id.into(),
            intervals,
            total_frames,
        })
    }

    /// Parses `start end word` lines. Raw positions are divided by
    /// `units_per_frame` and rounded half-up to frame numbers.
    pub fn parse(
        text: &str,
        video_id: &str,
        units_per_frame: f64,
        total_frames: usize,
    ) -> Result<Self, AlignError> {
        assert!(units_per_frame > 0.0, "units_per_frame must be positive");
        let mut intervals = Vec::new();
        for (line, content) in content_lines(text) {
            let malformed = |reason: &str| AlignError::MalformedLine {
                line,
                reason: reason.to_string(),
            };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let [start, end, word] = tokens[..] else {
                return Err(malformed("expected `start end word`"));
            };
            let to_frame = |raw: &str| -> Result<usize, AlignError> {
                let raw: f64 = raw.parse().map_err(|_| malformed("non-numeric position"))?;
                if !raw.is_finite() || raw < 0.0 {
                    return Err(malformed("negative or non-finite position"));
                }
                Ok((raw / units_per_frame + 0.5).floor() as usize)
            };
            let (start_frame, end_frame) = (to_frame(start)?, to_frame(end)?);
            if start_frame > end_frame {
                return Err(malformed("start after end"));
            }
            intervals.push(WordInterval {
                word: word.to_lowercase(),
                start_frame,
                end_frame,
            });
        }
        Self::new(video_id, intervals, total_frames)
    }
}

/// Reads a transcript file; the video id is the file stem.
pub fn parse_transcript(
    path: &Path,
    units_per_frame: f64,
    total_frames: usize,
) -> Result<Transcript, AlignError> {
    let text = std::fs::read_to_string(path).map_err(|source| AlignError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let video_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Transcript::parse(&text, &video_id, units_per_frame, total_frames)
}

/// Splits `n_frames` among `n_phonemes` as evenly as possible, giving the
/// remainder to the leading phonemes. With fewer frames than phonemes the
/// trailing phonemes get zero frames.
pub fn allocate_frames(n_frames: usize, n_phonemes: usize) -> Vec<usize> {
    assert!(n_phonemes >= 1, "need at least one phoneme");
    let base = n_frames / n_phonemes;
    let extra = n_frames % n_phonemes;
    (0..n_phonemes)
        .map(|i| base + usize::from(i < extra))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLabels {
    pub phonemes: Vec<PhonemeId>,
    pub visemes: Vec<VisemeId>,
}

impl FrameLabels {
    pub fn len(&self) -> usize {
        self.phonemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty()
    }
}

pub fn label_frames(
    t: &Transcript,
    dict: &PronunciationDict,
    map: &VisemeMap,
) -> Result<FrameLabels, AlignError> {
    let silence = map.silence_phoneme();
    let mut phonemes: Vec<Option<PhonemeId>> = vec![silence; t.total_frames];
    for iv in &t.intervals {
        let frames = &mut phonemes[iv.range()];
        if iv.word == SILENCE {
            if silence.is_none() {
                return Err(AlignError::UncoveredFrame {
                    video_id: t.video_id.clone(),
                    frame: iv.start_frame,
                });
            }
            continue;
        }
        let pron = dict.pronounce(&iv.word).map_err(|_| AlignError::UnknownWord {
            word: iv.word.clone(),
            video_id: t.video_id.clone(),
        })?;
        let counts = allocate_frames(frames.len(), pron.len());
        let dropped = counts.iter().filter(|&&c| c == 0).count();
        if dropped > 0 {
            log::warn!(
                "{}: word {:?} spans {} frames but has {} phonemes; dropping {} trailing phonemes",
                t.video_id,
                iv.word,
                frames.len(),
                pron.len(),
                dropped
            );
        }
        let mut slots = frames.iter_mut();
        for (&p, &count) in pron.iter().zip(&counts) {
            for slot in slots.by_ref().take(count) {
                *slot = Some(p);
            }
        }
    }
    let phonemes = phonemes
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| AlignError::UncoveredFrame {
                video_id: t.video_id.clone(),
                frame: i + 1,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let visemes = phonemes.iter().map(|&p| map.viseme_of(p)).collect();
    Ok(FrameLabels { phonemes, visemes })
}
