use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ClassifyError;

// singular values at or below this fraction of the largest count as zero
const RANK_TOL: f64 = 1e-10;

/// Leading left singular vectors and singular values of a training matrix.
///
/// Serialized with explicit shape fields; `left_vectors` is row-major
/// `dim`×`rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdProjection {
    pub dim: usize,
    pub rank: usize,
    pub left_vectors: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// Column mean removed before factorization, when centering is on.
    pub mean: Option<Vec<f64>>,
}

impl SvdProjection {
    pub fn left(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.rank, &self.left_vectors)
    }

    /// `S⁻¹ Uᵀ (x - mean)`: maps a training column onto its row of V.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ClassifyError> {
        if x.len() != self.dim {
            return Err(ClassifyError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let centered: Vec<f64> = match &self.mean {
            Some(mean) => x.iter().zip(mean).map(|(v, m)| v - m).collect(),
            None => x.to_vec(),
        };
        let mut out = vec![0.0; self.rank];
        for (i, &xi) in centered.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.left_vectors[i * self.rank..(i + 1) * self.rank];
            for (o, u) in out.iter_mut().zip(row) {
                *o += u * xi;
            }
        }
        for (o, s) in out.iter_mut().zip(&self.singular_values) {
            *o /= s;
        }
        Ok(out)
    }
}

/// Factorization of `x` (`D`×`N`, one sample per column) truncated to
/// `rank`. Returns the projection and the `N`×`rank` coordinates, row `i`
/// being row `i` of `V`.
pub fn fit_svd(
    x: &DMatrix<f64>,
    rank: usize,
    center: bool,
) -> Result<(SvdProjection, DMatrix<f64>), ClassifyError> {
    let (d, n) = x.shape();
    let max = d.min(n);
    if rank == 0 || rank > max {
        return Err(ClassifyError::RankTooLarge { requested: rank, available: max });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ClassifyError::NonFinite);
    }
    let mean: Option<Vec<f64>> = center.then(|| x.column_mean().iter().copied().collect());
    let mut work = x.clone();
    if let Some(mean) = &mean {
        for mut col in work.column_iter_mut() {
            for (v, m) in col.iter_mut().zip(mean) {
                *v -= m;
            }
        }
    }
    let svd = work
        .try_svd(true, true, 1e-15, 100_000)
        .ok_or(ClassifyError::NumericalFailure)?;
    let sigma = &svd.singular_values;
    let available = sigma.iter().take_while(|&&s| s > RANK_TOL * sigma[0]).count();
    if rank > available {
        return Err(ClassifyError::RankTooLarge { requested: rank, available });
    }
    let u = svd.u.as_ref().expect("requested").columns(0, rank).into_owned();
    let coords = svd.v_t.as_ref().expect("requested").rows(0, rank).transpose();
    let mut left_vectors = Vec::with_capacity(d * rank);
    for row in u.row_iter() {
        left_vectors.extend(row.iter());
    }
    Ok((
        SvdProjection {
            dim: d,
            rank,
            left_vectors,
            singular_values: sigma.iter().take(rank).copied().collect(),
            mean,
        },
        coords,
    ))
}
