use super::RasterFrame;

// sRGB primaries, D65 white
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const DELTA: f64 = 6.0 / 29.0;

/// CIELAB pixels of a frame, row-major `[L, a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

pub fn rgb_to_lab(f: &RasterFrame) -> LabFrame {
    LabFrame {
        width: f.width,
        height: f.height,
        pixels: f.pixels().map(srgb_to_lab).collect(),
    }
}

pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| {
        let c = f64::from(c) / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    });
    let xyz: [f64; 3] = std::array::from_fn(|i| {
        let row = RGB_TO_XYZ[i];
        (row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2]) / WHITE[i]
    });
    let [fx, fy, fz] = xyz.map(|t| {
        if t > DELTA.powi(3) {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    });
    [
        (116.0 * fy - 16.0).clamp(0.0, 100.0),
        500.0 * (fx - fy),
        200.0 * (fy - fz),
    ]
}
