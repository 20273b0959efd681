use rand::Rng;

use super::{ExtractError, LabFrame, LipMask};
use crate::seed;

const MAX_ITERS: usize = 100;
const MOVE_TOL: f64 = 1e-6;

/// k-means result on the (a, b) chroma plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub width: usize,
    pub height: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
    /// Inertia after each assignment step.
    pub inertia: Vec<f64>,
    /// Fewer distinct chroma points than clusters; some centroids coincide.
    pub degenerate: bool,
}

fn dist2(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
}

fn has_k_distinct(points: &[[f64; 2]], k: usize) -> bool {
    let mut keys: Vec<(u64, u64)> = points
        .iter()
        .map(|p| (p[0].to_bits(), p[1].to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len() >= k
}

/// Seeded k-means++ followed by Lloyd iterations on the (a, b) channels.
pub fn kmeans_ab(f: &LabFrame, k: usize, seed: u64) -> Result<Clustering, ExtractError> {
    if !(2..=4).contains(&k) {
        return Err(ExtractError::InvalidParameter(format!("k = {k} outside 2..=4")));
    }
    let points: Vec<[f64; 2]> = f.pixels.iter().map(|p| [p[1], p[2]]).collect();
    if points.len() < k {
        return Err(ExtractError::TooFewPixels { pixels: points.len(), k });
    }
    let degenerate = !has_k_distinct(&points, k);
    let mut rng = seed::rng(seed);

    // k-means++ seeding
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut nearest: Vec<f64> = points.iter().map(|&p| dist2(p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (d, &p) in nearest.iter_mut().zip(&points) {
            *d = d.min(dist2(p, c));
        }
        centroids.push(c);
    }

    let mut assignments = vec![0; points.len()];
    let mut inertia = Vec::new();
    for _ in 0..MAX_ITERS {
        let mut total = 0.0;
        for (a, &p) in assignments.iter_mut().zip(&points) {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(j, &c)| (j, dist2(p, c)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            *a = best;
            total += d;
        }
        inertia.push(total);

        let mut sums = vec![[0.0; 2]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(&points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        let mut moved: f64 = 0.0;
        for j in 0..k {
            // an empty cluster keeps its centroid
            if counts[j] > 0 {
                let n = counts[j] as f64;
                let next = [sums[j][0] / n, sums[j][1] / n];
                moved = moved.max(dist2(next, centroids[j]).sqrt());
                centroids[j] = next;
            }
        }
        if moved < MOVE_TOL {
            break;
        }
    }

    Ok(Clustering {
        width: f.width,
        height: f.height,
        assignments,
        centroids,
        inertia,
        degenerate,
    })
}

/// Mask of the cluster with the largest centroid a; ties go to the
/// smaller centroid b.
pub fn select_lip_cluster(c: &Clustering) -> LipMask {
    let best = c
        .centroids
        .iter()
        .enumerate()
        .reduce(|best, cand| {
            let (ba, ca) = (best.1[0], cand.1[0]);
            if ca > ba || (ca == ba && cand.1[1] < best.1[1]) {
                cand
            } else {
                best
            }
        })
        .map(|(j, _)| j)
        .unwrap_or(0);
    LipMask::new(
        c.width,
        c.height,
        c.assignments.iter().map(|&a| a == best).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lip_extract::{rgb_to_lab, RasterFrame};
    use rand::SeedableRng;

    fn lab_from_points(points: &[[f64; 2]]) -> LabFrame {
        LabFrame {
            width: points.len(),
            height: 1,
            pixels: points.iter().map(|p| [50.0, p[0], p[1]]).collect(),
        }
    }

    fn with_centroids(centroids: Vec<[f64; 2]>) -> Clustering {
        Clustering {
            width: 2,
            height: 1,
            assignments: vec![0, 1],
            centroids,
            inertia: vec![],
            degenerate: false,
        }
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut points = Vec::new();
        let mut truth = Vec::new();
        for i in 0..400 {
            let (cx, cy, label) = if i % 2 == 0 { (40.0, 20.0, 0) } else { (-10.0, 5.0, 1) };
            points.push([cx + rng.random_range(-1.0..1.0), cy + rng.random_range(-1.0..1.0)]);
            truth.push(label);
        }
        let c = kmeans_ab(&lab_from_points(&points), 2, 11).unwrap();
        assert!(!c.degenerate);
        let flip = c.assignments[0] != truth[0];
        for (a, t) in c.assignments.iter().zip(&truth) {
            assert_eq!(*a == 1, (*t == 1) != flip);
        }
    }

    #[test]
    fn uniform_frame_is_degenerate() {
        let lab = rgb_to_lab(&RasterFrame::filled(6, 6, [200, 150, 130]));
        let c = kmeans_ab(&lab, 2, 1).unwrap();
        assert!(c.degenerate);
        assert!(dist2(c.centroids[0], c.centroids[1]) < 1e-18);
    }

    #[test]
    fn seeded_runs_repeat() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let points: Vec<[f64; 2]> = (0..300)
            .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
            .collect();
        let lab = lab_from_points(&points);
        assert_eq!(kmeans_ab(&lab, 3, 9).unwrap(), kmeans_ab(&lab, 3, 9).unwrap());
    }

    #[test]
    fn parameter_errors() {
        let lab = lab_from_points(&[[0.0, 0.0]]);
        assert!(matches!(kmeans_ab(&lab, 2, 0), Err(ExtractError::TooFewPixels { .. })));
        assert!(matches!(kmeans_ab(&lab, 5, 0), Err(ExtractError::InvalidParameter(_))));
    }

    #[test]
    fn inertia_never_increases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..1000u64 {
            let n = rng.random_range(8..60);
            let points: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)])
                .collect();
            let k = 2 + (trial % 3) as usize;
            let c = kmeans_ab(&lab_from_points(&points), k, trial).unwrap();
            for w in c.inertia.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "trial {trial}: {:?}", c.inertia);
            }
        }
    }

    #[test]
    fn lip_cluster_selection() {
        let m = select_lip_cluster(&with_centroids(vec![[30.0, 20.0], [10.0, 15.0]]));
        assert_eq!(m.data, [true, false]);
        let m = select_lip_cluster(&with_centroids(vec![[30.0, 20.0], [30.0, 15.0]]));
        assert_eq!(m.data, [false, true]);
    }
}
