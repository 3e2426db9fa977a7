use alloc::vec::Vec;

use super::LabelVector;
use crate::corpus::NUM_LABELS;
use crate::math;
use crate::numcore::{sgd_hinge_step, LinearWeights, Rng};
use crate::{Error, Result};

/// Twelve independent one-vs-rest linear SVMs.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSet {
    pub classifiers: Vec<LinearWeights>,
    pub lambda: f64,
}

impl SvmSet {
    pub fn zeros(dim: usize, lambda: f64) -> Self {
        SvmSet {
            classifiers: (0..NUM_LABELS).map(|_| LinearWeights::zeros(dim)).collect(),
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.classifiers[0].w.len()
    }

    pub fn margins(&self, x: &[f64]) -> Result<[f64; NUM_LABELS]> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut m = [0.0; NUM_LABELS];
        for (dst, c) in m.iter_mut().zip(&self.classifiers) {
            *dst = c.margin(x);
        }
        Ok(m)
    }
}

/// Pegasos SGD per label. All labels see the same per-epoch example order,
/// so each classifier depends only on its own targets. A label without
/// positives gets the constant scorer `w = 0, b = -1`.
pub fn train_svm(
    xs: &[Vec<f64>],
    labels: &[LabelVector],
    lambda: f64,
    epochs: usize,
    rng: &mut Rng,
) -> Result<SvmSet> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "SVM lambda must be positive, got {lambda}"
        )));
    }
    if xs.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if epochs == 0 {
        return Err(Error::NoTrainingPerformed);
    }
    if xs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: labels.len(),
        });
    }
    let dim = xs[0].len();
    if let Some(bad) = xs.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let orders: Vec<Vec<usize>> = (0..epochs).map(|_| rng.permutation(xs.len())).collect();
    let mut set = SvmSet::zeros(dim, lambda);
    for (k, clf) in set.classifiers.iter_mut().enumerate() {
        if !labels.iter().any(|y| y.get(k)) {
            clf.b = -1.0;
            continue;
        }
        let mut t = 0u64;
        for order in &orders {
            for &i in order {
                t += 1;
                let y = if labels[i].get(k) { 1.0 } else { -1.0 };
                sgd_hinge_step(clf, &xs[i], y, lambda, t)?;
            }
        }
        if !clf.w.iter().all(|v| v.is_finite()) || !clf.b.is_finite() {
            return Err(Error::NonFinite(alloc::format!("SVM weights for label {k}")));
        }
    }
    Ok(set)
}

/// Logistic squash of each raw margin.
pub fn predict_svm(model: &SvmSet, x: &[f64]) -> Result<[f64; NUM_LABELS]> {
    Ok(model.margins(x)?.map(math::posterior))
}
