use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ClassifyError;

// variance floor as a fraction of the mean per-dimension variance
const VAR_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes over the classes seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub dim: usize,
    /// Class labels, ascending.
    pub classes: Vec<usize>,
    pub priors: Vec<f64>,
    /// Row-major classes×dim.
    pub means: Vec<f64>,
    /// Row-major classes×dim, each at least the floor.
    pub variances: Vec<f64>,
}

fn check_dims(coords: &[Vec<f64>], labels: &[usize]) -> Result<usize, ClassifyError> {
    if coords.is_empty() || coords.len() != labels.len() {
        return Err(ClassifyError::LabelMismatch { samples: coords.len(), labels: labels.len() });
    }
    let dim = coords[0].len();
    if let Some(c) = coords.iter().find(|c| c.len() != dim) {
        return Err(ClassifyError::DimensionMismatch { expected: dim, found: c.len() });
    }
    Ok(dim)
}

/// Fits per-class priors, means and variances. When `classes` is given,
/// every listed class must have a training sample.
pub fn nb_train(
    coords: &[Vec<f64>],
    labels: &[usize],
    classes: Option<&[usize]>,
) -> Result<GaussianNb, ClassifyError> {
    let dim = check_dims(coords, labels)?;
    let mut groups: BTreeMap<usize, Vec<&[f64]>> = BTreeMap::new();
    for (c, &l) in coords.iter().zip(labels) {
        groups.entry(l).or_default().push(c);
    }
    if let Some(required) = classes {
        if let Some(&missing) = required.iter().find(|c| !groups.contains_key(c)) {
            return Err(ClassifyError::EmptyClass(missing));
        }
    }

    let n = coords.len() as f64;
    let mut global_var = 0.0;
    for j in 0..dim {
        let mean = coords.iter().map(|c| c[j]).sum::<f64>() / n;
        global_var += coords.iter().map(|c| (c[j] - mean).powi(2)).sum::<f64>() / n;
    }
    let floor = (VAR_FLOOR * global_var / dim.max(1) as f64).max(f64::MIN_POSITIVE);

    let mut model = GaussianNb {
        dim,
        classes: Vec::with_capacity(groups.len()),
        priors: Vec::with_capacity(groups.len()),
        means: Vec::with_capacity(groups.len() * dim),
        variances: Vec::with_capacity(groups.len() * dim),
    };
    for (label, members) in &groups {
        let m = members.len() as f64;
        model.classes.push(*label);
        model.priors.push(m / n);
        for j in 0..dim {
            let mean = members.iter().map(|c| c[j]).sum::<f64>() / m;
            let var = members.iter().map(|c| (c[j] - mean).powi(2)).sum::<f64>() / m;
            model.means.push(mean);
            model.variances.push(var.max(floor));
        }
    }
    Ok(model)
}

impl GaussianNb {
    /// Log joint density `log p(class) + log p(x | class)` per class.
    pub fn log_scores(&self, x: &[f64]) -> Result<Vec<f64>, ClassifyError> {
        if x.len() != self.dim {
            return Err(ClassifyError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        Ok((0..self.classes.len())
            .map(|c| {
                let means = &self.means[c * self.dim..(c + 1) * self.dim];
                let vars = &self.variances[c * self.dim..(c + 1) * self.dim];
                let ll: f64 = x
                    .iter()
                    .zip(means)
                    .zip(vars)
                    .map(|((xi, mu), var)| ln_2pi + var.ln() + (xi - mu).powi(2) / var)
                    .sum();
                self.priors[c].ln() - 0.5 * ll
            })
            .collect())
    }

    /// Maximum-posterior class; exact ties go to the lower label.
    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifyError> {
        let scores = self.log_scores(x)?;
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        Ok(self.classes[best])
    }
}

pub fn nb_predict(model: &GaussianNb, coord: &[f64]) -> Result<usize, ClassifyError> {
    model.predict(coord)
}
