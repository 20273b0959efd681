use super::{GrayFrame, LipMask};

/// Resamples a `w`×`h` row-major field onto a `grid_w`×`grid_h` grid.
/// Each cell is the area-weighted mean of the pixels it overlaps, pixels
/// being unit squares.
pub fn area_pool(values: &[f64], w: usize, h: usize, grid_w: usize, grid_h: usize) -> Vec<f64> {
    assert!(grid_w >= 1 && grid_h >= 1, "grid must be at least 1x1");
    assert_eq!(values.len(), w * h);
    let wx = overlap_weights(w, grid_w);
    let wy = overlap_weights(h, grid_h);
    let cell_area = (w as f64 / grid_w as f64) * (h as f64 / grid_h as f64);
    let mut out = Vec::with_capacity(grid_w * grid_h);
    for ys in &wy {
        for xs in &wx {
            let mut acc = 0.0;
            for &(py, fy) in ys {
                let row = &values[py * w..(py + 1) * w];
                for &(px, fx) in xs {
                    acc += row[px] * fx * fy;
                }
            }
            out.push(acc / cell_area);
        }
    }
    out
}

// For each of `cells` equal spans over [0, n), the pixels it touches and
// the length of each overlap.
fn overlap_weights(n: usize, cells: usize) -> Vec<Vec<(usize, f64)>> {
    let step = n as f64 / cells as f64;
    (0..cells)
        .map(|c| {
            let (lo, hi) = (c as f64 * step, (c + 1) as f64 * step);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n);
            (first..last)
                .filter_map(|p| {
                    let overlap = (hi.min(p as f64 + 1.0) - lo.max(p as f64)).max(0.0);
                    (overlap > 0.0).then_some((p, overlap))
                })
                .collect()
        })
        .collect()
}

/// Crops the mask to its bounding box and pools it onto the grid, giving
/// the covered fraction of each cell. An empty mask yields zeros.
pub fn mask_to_feature(m: &LipMask, grid_w: usize, grid_h: usize) -> Vec<f64> {
    let Some((x0, y0, x1, y1)) = m.bounding_box() else {
        log::warn!("empty lip mask; emitting a zero feature vector");
        return vec![0.0; grid_w * grid_h];
    };
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut values = Vec::with_capacity(w * h);
    for y in y0..=y1 {
        for x in x0..=x1 {
            values.push(if m.get(x, y) { 1.0 } else { 0.0 });
        }
    }
    area_pool(&values, w, h, grid_w, grid_h)
}

/// Grayscale region pooled onto the grid, scaled to 0..1.
pub fn gray_to_feature(g: &GrayFrame, grid_w: usize, grid_h: usize) -> Vec<f64> {
    let scaled: Vec<f64> = g.data.iter().map(|v| v / 255.0).collect();
    area_pool(&scaled, g.width, g.height, grid_w, grid_h)
}
