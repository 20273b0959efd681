//! Frame classification: truncated SVD of the frame data matrix, then
//! Gaussian naive Bayes or k-nearest neighbours on the reduced coordinates.

mod bayes;
mod knn;
mod svd;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

pub use bayes::{nb_predict, nb_train, GaussianNb};
pub use knn::{knn_predict, Knn};
pub use svd::{fit_svd, SvdProjection};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("rank {requested} requested but only {available} available")]
    RankTooLarge { requested: usize, available: usize },
    #[error("SVD did not converge")]
    NumericalFailure,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{samples} samples but {labels} labels")]
    LabelMismatch { samples: usize, labels: usize },
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("k = {k} invalid for {samples} training samples")]
    InvalidK { k: usize, samples: usize },
    #[error("feature matrix contains non-finite values")]
    NonFinite,
    #[error("empty feature matrix")]
    Empty,
}

/// `D`×`N` data matrix, one frame feature per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    /// `(video_id, frame)` of each column.
    pub column_ids: Vec<(String, usize)>,
}

impl FeatureMatrix {
    pub fn from_columns(
        columns: &[Vec<f64>],
        column_ids: Vec<(String, usize)>,
    ) -> Result<Self, ClassifyError> {
        let Some(first) = columns.first() else {
            return Err(ClassifyError::Empty);
        };
        let d = first.len();
        if let Some(c) = columns.iter().find(|c| c.len() != d) {
            return Err(ClassifyError::DimensionMismatch { expected: d, found: c.len() });
        }
        assert_eq!(columns.len(), column_ids.len(), "one id per column");
        let values = DMatrix::from_fn(d, columns.len(), |i, j| columns[j][i]);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite);
        }
        Ok(Self { values, column_ids })
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }
}

/// Seeded shuffle split. The training part has `round(fraction * n)`
/// items; both index lists come back sorted.
pub fn split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    assert!(
        train_fraction > 0.0 && train_fraction < 1.0,
        "train fraction must lie in (0, 1)"
    );
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let n_train = ((train_fraction * n as f64) + 0.5).floor() as usize;
    let (train, test) = order.split_at(n_train.min(n));
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Fraction of `test` items whose prediction matches the label.
pub fn evaluate_classifier<F>(predict: F, coords: &[Vec<f64>], labels: &[usize], test: &[usize]) -> f64
where
    F: Fn(&[f64]) -> usize,
{
    if test.is_empty() {
        return 0.0;
    }
    let correct = test
        .iter()
        .filter(|&&i| predict(&coords[i]) == labels[i])
        .count();
    correct as f64 / test.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    #[default]
    Knn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    NaiveBayes(GaussianNb),
    Knn(Knn),
}

impl Classifier {
    pub fn train(
        kind: ClassifierKind,
        coords: &[Vec<f64>],
        labels: &[usize],
        knn_k: usize,
    ) -> Result<Self, ClassifyError> {
        Ok(match kind {
            ClassifierKind::NaiveBayes => Self::NaiveBayes(nb_train(coords, labels, None)?),
            ClassifierKind::Knn => Self::Knn(Knn::new(knn_k, coords.to_vec(), labels.to_vec())?),
        })
    }

    pub fn predict(&self, coord: &[f64]) -> Result<usize, ClassifyError> {
        match self {
            Self::NaiveBayes(m) => m.predict(coord),
            Self::Knn(m) => m.predict(coord),
        }
    }
}

/// A projection plus a classifier on its coordinates: everything needed
/// to label a raw feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameClassifier {
    pub alphabet_size: usize,
    pub projection: SvdProjection,
    pub classifier: Classifier,
}

impl FrameClassifier {
    pub fn dim(&self) -> usize {
        self.projection.dim
    }

    pub fn predict(&self, feature: &[f64]) -> Result<usize, ClassifyError> {
        self.classifier.predict(&self.projection.project(feature)?)
    }
}

/// Rows of an `N`×`r` coordinate matrix as vectors.
pub fn coordinate_rows(coords: &DMatrix<f64>) -> Vec<Vec<f64>> {
    coords.row_iter().map(|r| r.iter().copied().collect()).collect()
}
