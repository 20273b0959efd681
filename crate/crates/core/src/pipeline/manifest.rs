use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::alignment::{parse_transcript, Transcript, DEFAULT_TOTAL_FRAMES};
use crate::lip_extract::Roi;

const DEFAULT_PATTERN: &str = "frames/{video_id}_{frame:03}.ppm";

fn default_frames() -> usize {
    DEFAULT_TOTAL_FRAMES
}

fn default_units() -> f64 {
    1.0
}

fn default_pattern() -> String {
    DEFAULT_PATTERN.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    /// Relative to the manifest root. `{video_id}` and `{frame}` (or
    /// `{frame:03}` for zero padding) are substituted; frames are 1-based.
    #[serde(default = "default_pattern")]
    pub frame_pattern: String,
    /// Transcript file relative to the root.
    pub transcript: PathBuf,
    /// Mouth region; the whole frame when absent.
    #[serde(default)]
    pub roi: Option<Roi>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Base directory for relative paths; the manifest's own directory
    /// when empty.
    #[serde(default)]
    pub root: PathBuf,
    #[serde(default = "default_frames")]
    pub frames_per_video: usize,
    #[serde(default = "default_units")]
    pub units_per_frame: f64,
    pub videos: Vec<VideoEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut m: Self = serde_json::from_str(&text).map_err(|source| PipelineError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.root = if m.root.as_os_str().is_empty() {
            base.to_path_buf()
        } else {
            base.join(&m.root)
        };
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        super::io::write_json(path, self)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.frames_per_video == 0 {
            return Err(PipelineError::Manifest("frames_per_video must be positive".into()));
        }
        if !(self.units_per_frame > 0.0) {
            return Err(PipelineError::Manifest("units_per_frame must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for v in &self.videos {
            if !seen.insert(v.video_id.as_str()) {
                return Err(PipelineError::Manifest(format!("duplicate video id {}", v.video_id)));
            }
            if let Some(roi) = v.roi {
                if roi.w == 0 || roi.h == 0 {
                    return Err(PipelineError::Manifest(format!("empty ROI for {}", v.video_id)));
                }
            }
        }
        Ok(())
    }

    pub fn frame_path(&self, video: &VideoEntry, frame: usize) -> PathBuf {
        let rel = video
            .frame_pattern
            .replace("{video_id}", &video.video_id)
            .replace("{frame:03}", &format!("{frame:03}"))
            .replace("{frame}", &frame.to_string());
        self.root.join(rel)
    }

    pub fn transcript_path(&self, video: &VideoEntry) -> PathBuf {
        self.root.join(&video.transcript)
    }

    /// Parses every transcript; `units_per_frame` overrides the manifest's.
    pub fn transcripts(
        &self,
        units_per_frame: Option<f64>,
    ) -> Result<BTreeMap<String, Transcript>, PipelineError> {
        let units = units_per_frame.unwrap_or(self.units_per_frame);
        self.videos
            .iter()
            .map(|v| {
                let path = self.transcript_path(v);
                if !path.exists() {
                    return Err(PipelineError::MissingTranscript(v.video_id.clone()));
                }
                let mut t = parse_transcript(&path, units, self.frames_per_video)?;
                t.video_id = v.video_id.clone();
                Ok((v.video_id.clone(), t))
            })
            .collect()
    }
}
