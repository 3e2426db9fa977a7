use alloc::vec::Vec;

use super::svd::{orthonormalize_columns, randomized_svd, thin_svd};
use super::{FeatureKind, FeatureVector};
use crate::numcore::{Matrix, Rng};
use crate::{Error, Result};

/// Settings of the truncated SVD behind [`fit_lsa`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsaOptions {
    pub oversample: usize,
    pub power_iters: usize,
    /// Exact SVD is used when `min(rows, cols)` is at most this.
    pub dense_threshold: usize,
}

impl Default for LsaOptions {
    fn default() -> Self {
        LsaOptions {
            oversample: 10,
            power_iters: 4,
            dense_threshold: 64,
        }
    }
}

/// Projection onto the leading right-singular subspace of the training
/// tf-idf matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LsaModel {
    /// `V × k`, orthonormal columns.
    pub projection: Matrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
}

pub fn fit_lsa(tfidf: &Matrix, k: usize, seed: u64) -> Result<LsaModel> {
    fit_lsa_with(tfidf, k, seed, LsaOptions::default())
}

pub fn fit_lsa_with(tfidf: &Matrix, k: usize, seed: u64, opts: LsaOptions) -> Result<LsaModel> {
    let max = tfidf.rows().min(tfidf.cols());
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { k, max });
    }
    let (mut projection, singular_values) = if max <= opts.dense_threshold {
        let svd = thin_svd(tfidf);
        (svd.v.leading_columns(k), svd.s[..k].to_vec())
    } else {
        randomized_svd(tfidf, k, opts.oversample, opts.power_iters, &mut Rng::new(seed))
    };
    orthonormalize_columns(&mut projection);
    canonical_signs(&mut projection);
    Ok(LsaModel {
        projection,
        singular_values,
    })
}

/// Flips each column so its largest-magnitude entry is positive.
fn canonical_signs(p: &mut Matrix) {
    for j in 0..p.cols() {
        let mut best = 0;
        for i in 0..p.rows() {
            if p[(i, j)].abs() > p[(best, j)].abs() {
                best = i;
            }
        }
        if p[(best, j)] < 0.0 {
            for i in 0..p.rows() {
                p[(i, j)] = -p[(i, j)];
            }
        }
    }
}

impl LsaModel {
    pub fn input_dim(&self) -> usize {
        self.projection.rows()
    }

    pub fn dim(&self) -> usize {
        self.projection.cols()
    }

    /// `xᵀ P`.
    pub fn transform(&self, x: &FeatureVector) -> Result<FeatureVector> {
        if x.values.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.values.len(),
            });
        }
        Ok(FeatureVector {
            values: self.projection.matvec_t(&x.values),
            kind: FeatureKind::Lsa,
        })
    }

    /// Captured energy `Σ σ²`.
    pub fn energy(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum()
    }
}

/// `‖A - A P Pᵀ‖_F`
pub fn reconstruction_error(a: &Matrix, projection: &Matrix) -> f64 {
    let coords = a.matmul(projection);
    let back = coords.matmul(&projection.transpose());
    a.sub(&back).frobenius_norm()
}
