//! Canny edge detection with automatic threshold lowering.
//!
//! Gaussian smoothing (sigma 1.4) and Sobel gradients are computed once;
//! non-maximum suppression does not depend on the thresholds, so only the
//! hysteresis stage is repeated when the threshold is lowered.

use std::collections::VecDeque;

use super::{ExtractError, GrayFrame};

const SIGMA: f64 = 1.4;
const LOW_RATIO: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    /// Initial high threshold, in Sobel magnitude units of a 0..255 image.
    pub t0: f64,
    /// Minimum edge pixel count for a detection to be accepted.
    pub min_pixels: usize,
    /// Multiplier applied to the high threshold on each lowering.
    pub factor: f64,
    pub max_lowerings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeResult {
    pub width: usize,
    pub height: usize,
    pub edges: Vec<bool>,
    pub lowerings: usize,
    /// Number of hysteresis passes run.
    pub runs: usize,
    pub high_threshold: f64,
    /// False when the last pass still had fewer than `min_pixels` edges.
    pub found: bool,
}

impl EdgeResult {
    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn smooth(g: &GrayFrame) -> Vec<f64> {
    let (w, h) = (g.width, g.height);
    let k = gaussian_kernel(SIGMA);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * g.data[y * w + clamp_index(x as isize + j as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * tmp[clamp_index(y as isize + j as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Thinned gradient magnitude: non-maxima along the gradient direction are
/// zeroed.
fn suppressed_gradient(g: &GrayFrame) -> Vec<f64> {
    let (w, h) = (g.width, g.height);
    let s = smooth(g);
    let at = |x: isize, y: isize| s[clamp_index(y, h) * w + clamp_index(x, w)];
    let mut mag = vec![0.0; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            let angle = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            dir[i] = match angle {
                a if !(22.5..157.5).contains(&a) => 0,
                a if a < 67.5 => 1,
                a if a < 112.5 => 2,
                _ => 3,
            };
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let (dx, dy) = match dir[i] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let neighbour = |sx: isize, sy: isize| {
                let (nx, ny) = (x + sx, y + sy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    0.0
                } else {
                    mag[ny as usize * w + nx as usize]
                }
            };
            // strict on one side so flat two-pixel ridges thin to one pixel
            if mag[i] > neighbour(-dx, -dy) && mag[i] >= neighbour(dx, dy) {
                out[i] = mag[i];
            }
        }
    }
    out
}

fn hysteresis(mag: &[f64], w: usize, h: usize, high: f64) -> Vec<bool> {
    let low = LOW_RATIO * high;
    let mut edges = vec![false; w * h];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, &m) in mag.iter().enumerate() {
        if m >= high && m > 0.0 {
            edges[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edges[j] && mag[j] >= low && mag[j] > 0.0 {
                    edges[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    edges
}

/// Runs Canny at `t0`, lowering the high threshold by `factor` until at
/// least `min_pixels` edge pixels are found or `max_lowerings` is spent.
pub fn canny_adaptive(gray: &GrayFrame, p: CannyParams) -> Result<EdgeResult, ExtractError> {
    if !(p.t0 > 0.0) {
        return Err(ExtractError::InvalidParameter(format!("t0 = {} must be positive", p.t0)));
    }
    if !(p.factor > 0.0 && p.factor < 1.0) {
        return Err(ExtractError::InvalidParameter(format!(
            "factor = {} outside (0, 1)",
            p.factor
        )));
    }
    let (w, h) = (gray.width, gray.height);
    let mag = suppressed_gradient(gray);
    let mut high = p.t0;
    let mut lowerings = 0;
    loop {
        let edges = hysteresis(&mag, w, h, high);
        let count = edges.iter().filter(|&&e| e).count();
        let found = count >= p.min_pixels;
        if found || lowerings == p.max_lowerings {
            if !found {
                log::warn!(
                    "no edge with {} pixels after {} lowerings (got {count})",
                    p.min_pixels,
                    lowerings
                );
            }
            return Ok(EdgeResult {
                width: w,
                height: h,
                edges,
                lowerings,
                runs: lowerings + 1,
                high_threshold: high,
                found,
            });
        }
        high *= p.factor;
        lowerings += 1;
    }
}
