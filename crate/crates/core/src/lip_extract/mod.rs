//! Lip segmentation and per-frame features.
//!
//! The default extractor converts a mouth-region crop to CIELAB, clusters
//! its pixels on the (a, b) chroma plane, takes the reddest cluster as the
//! lips and pools the resulting mask onto a fixed grid. Adaptive Canny and
//! DMD background separation are kept as alternative extractors.

mod canny;
mod color;
mod dmd;
mod feature;
mod kmeans;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canny::{canny_adaptive, CannyParams, EdgeResult};
pub use color::{rgb_to_lab, srgb_to_lab, LabFrame};
pub use dmd::{dmd_separate, DmdSeparation};
pub use feature::{area_pool, gray_to_feature, mask_to_feature};
pub use kmeans::{kmeans_ab, select_lip_cluster, Clustering};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("cannot read frame {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("cannot write frame {path}: {reason}")]
    Write { path: String, reason: String },
    #[error("frame has {pixels} pixels, fewer than k = {k}")]
    TooFewPixels { pixels: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("need at least 3 frames, got {0}")]
    TooFewFrames(usize),
    #[error("rank {rank} exceeds {max} (frame count - 1)")]
    RankTooLarge { rank: usize, max: usize },
    #[error("region {x},{y} {w}x{h} lies outside a {width}x{height} frame")]
    RoiOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Rectangle in pixel coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// 8-bit sRGB frame, row-major, three samples per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RasterFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert!(width * height >= 1, "empty frame");
        assert_eq!(data.len(), width * height * 3, "sample count");
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::new(width, height, rgb.repeat(width * height))
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn crop(&self, roi: Roi) -> Result<Self, ExtractError> {
        if roi.w == 0 || roi.h == 0 || roi.x + roi.w > self.width || roi.y + roi.h > self.height {
            return Err(ExtractError::RoiOutOfBounds {
                x: roi.x,
                y: roi.y,
                w: roi.w,
                h: roi.h,
                width: self.width,
                height: self.height,
            });
        }
        let mut data = Vec::with_capacity(roi.w * roi.h * 3);
        for y in roi.y..roi.y + roi.h {
            let start = (y * self.width + roi.x) * 3;
            data.extend_from_slice(&self.data[start..start + roi.w * 3]);
        }
        Ok(Self::new(roi.w, roi.h, data))
    }

    /// Rec. 601 luma, on the 0..255 scale.
    pub fn to_gray(&self) -> GrayFrame {
        let data = self
            .pixels()
            .map(|[r, g, b]| 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b))
            .collect();
        GrayFrame::new(self.width, self.height, data)
    }

    /// Reads a binary PPM or PGM (or anything else the image decoder knows).
    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        let img = image::open(path).map_err(|e| ExtractError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Ok(Self::new(w as usize, h as usize, rgb.into_raw()))
    }

    /// Writes a binary PPM.
    pub fn save_ppm(&self, path: &Path) -> Result<(), ExtractError> {
        let mut bytes = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        bytes.extend_from_slice(&self.data);
        std::fs::write(path, bytes).map_err(|e| ExtractError::Write {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// Single-channel frame with real samples, nominally 0..255.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "sample count");
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Binary per-pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LipMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl LipMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height, "mask size");
        Self { width, height, data }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for (i, _) in self.data.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = (i % self.width, i / self.width);
            bbox = Some(match bbox {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bbox
    }

    /// Intersection over union with another mask of the same size.
    pub fn iou(&self, other: &LipMask) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.data.iter().zip(&other.data) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Which representation feeds the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Lip mask cropped to its bounding box and pooled onto the grid.
    #[default]
    MaskGrid,
    /// Grayscale mouth region pooled onto the grid, scaled to 0..1.
    RawRoi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractorConfig {
    pub feature_mode: FeatureMode,
    pub grid_w: usize,
    pub grid_h: usize,
    pub kmeans_k: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            feature_mode: FeatureMode::MaskGrid,
            grid_w: 32,
            grid_h: 16,
            kmeans_k: 3,
        }
    }
}

impl ExtractorConfig {
    pub fn dim(&self) -> usize {
        self.grid_w * self.grid_h
    }
}

/// Segments the lips of a mouth-region frame.
pub fn segment_lips(roi: &RasterFrame, k: usize, seed: u64) -> Result<LipMask, ExtractError> {
    let lab = rgb_to_lab(roi);
    let clusters = kmeans_ab(&lab, k, seed)?;
    if clusters.degenerate {
        log::warn!("k-means input has fewer than {k} distinct colors");
    }
    Ok(select_lip_cluster(&clusters))
}

/// Feature vector for one mouth-region frame.
pub fn extract_feature(
    roi: &RasterFrame,
    cfg: &ExtractorConfig,
    seed: u64,
) -> Result<Vec<f64>, ExtractError> {
    match cfg.feature_mode {
        FeatureMode::MaskGrid => {
            let mask = segment_lips(roi, cfg.kmeans_k, seed)?;
            Ok(mask_to_feature(&mask, cfg.grid_w, cfg.grid_h))
        }
        FeatureMode::RawRoi => Ok(gray_to_feature(&roi.to_gray(), cfg.grid_w, cfg.grid_h)),
    }
}
