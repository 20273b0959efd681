use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ClassifyError;

/// k-nearest-neighbour classifier with Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub coords: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Knn {
    pub fn new(k: usize, coords: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, ClassifyError> {
        if coords.is_empty() || coords.len() != labels.len() {
            return Err(ClassifyError::LabelMismatch { samples: coords.len(), labels: labels.len() });
        }
        if k == 0 || k > coords.len() {
            return Err(ClassifyError::InvalidK { k, samples: coords.len() });
        }
        let dim = coords[0].len();
        if let Some(c) = coords.iter().find(|c| c.len() != dim) {
            return Err(ClassifyError::DimensionMismatch { expected: dim, found: c.len() });
        }
        Ok(Self { k, coords, labels })
    }

    pub fn dim(&self) -> usize {
        self.coords[0].len()
    }

    /// Majority label among the `k` nearest points. Distance ties favour the
    /// lower training index, vote ties the lower label.
    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifyError> {
        if x.len() != self.dim() {
            return Err(ClassifyError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let mut dists: Vec<(f64, usize)> = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| (c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for &(_, i) in &dists[..self.k] {
            *votes.entry(self.labels[i]).or_default() += 1;
        }
        let mut best = (0, 0);
        for (&label, &count) in &votes {
            if count > best.1 {
                best = (label, count);
            }
        }
        Ok(best.0)
    }
}

pub fn knn_predict(model: &Knn, coord: &[f64]) -> Result<usize, ClassifyError> {
    model.predict(coord)
}
