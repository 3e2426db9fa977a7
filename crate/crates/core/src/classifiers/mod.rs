//! Non-contextual topic classifiers: binary-relevance linear SVMs and a
//! feedforward network with sigmoid outputs trained on binary cross-entropy.
//! The feedforward head and the training loop are shared with the
//! contextual models.

mod head;
mod mlp;
mod svm;
pub mod training;

use alloc::collections::BTreeSet;

pub use head::{FeedForwardHead, HeadCache, HeadSpec};
pub use mlp::{predict_mlp, train_mlp, MlpModel, SegmentExample};
pub use svm::{predict_svm, train_svm, SvmSet};

use crate::corpus::{TopicLabel, NUM_LABELS};
use crate::math;
use crate::{Error, Result};

/// Probabilities are clipped into `[ε, 1 - ε]` before taking logs.
pub const BCE_EPSILON: f64 = 1e-12;

/// Per-segment 12-label binary target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelVector(pub [bool; NUM_LABELS]);

impl LabelVector {
    pub fn from_labels(labels: &BTreeSet<TopicLabel>) -> Result<Self> {
        let mut y = [false; NUM_LABELS];
        for l in labels {
            y[l.id()] = true;
        }
        let v = LabelVector(y);
        if v.0[TopicLabel::OUT_OF_DOMAIN.id()] && labels.len() > 1 {
            return Err(Error::ExclusiveLabel {
                segment_id: alloc::string::String::new(),
            });
        }
        Ok(v)
    }

    pub fn targets(&self) -> [f64; NUM_LABELS] {
        self.0.map(|b| if b { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, label: usize) -> bool {
        self.0[label]
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn has_in_domain(&self) -> bool {
        self.0[..NUM_LABELS - 1].iter().any(|&b| b)
    }
}

/// `-Σ_k (y_k ln o_k + (1 - y_k) ln(1 - o_k))` with `o` clipped into
/// `[ε, 1 - ε]`.
pub fn bce_loss(o: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(o.len(), y.len());
    o.iter()
        .zip(y)
        .map(|(&o, &y)| {
            let o = o.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
            -(y * math::ln(o) + (1.0 - y) * math::ln(1.0 - o))
        })
        .sum()
}

/// Elementwise logistic of 12 logits, kept strictly inside (0, 1).
pub fn sigmoid_all(logits: &[f64]) -> [f64; NUM_LABELS] {
    let mut o = [0.0; NUM_LABELS];
    for (dst, &z) in o.iter_mut().zip(logits) {
        *dst = math::posterior(z);
    }
    o
}

/// Micro-averaged F1 over all 12 labels at threshold 0.5.
pub fn micro_f1(posteriors: &[[f64; NUM_LABELS]], labels: &[LabelVector]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (o, y) in posteriors.iter().zip(labels) {
        for k in 0..NUM_LABELS {
            match (o[k] >= 0.5, y.get(k)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_at_one_half() {
        let o = [0.5; 12];
        let mut y = [0.0; 12];
        y[3] = 1.0;
        let expect = 12.0 * core::f64::consts::LN_2;
        assert!((bce_loss(&o, &y) - expect).abs() < 1e-12);
        assert!((expect - 8.317_766_17).abs() < 1e-8);
    }

    #[test]
    fn bce_perfect_prediction_is_near_zero() {
        let mut y = [0.0; 12];
        y[0] = 1.0;
        let loss = bce_loss(&y, &y);
        assert!(loss >= 0.0);
        assert!(loss <= 12.0 * -libm::log(1.0 - BCE_EPSILON) + 1e-15);
    }

    #[test]
    fn bce_hand_value() {
        let mut y = [0.0; 12];
        y[0] = 1.0;
        let mut o = [0.1; 12];
        o[0] = 0.9;
        let expect = -12.0 * libm::log(0.9);
        assert!((bce_loss(&o, &y) - expect).abs() < 1e-12);
        assert!((expect - 1.26433).abs() < 1e-5);
    }

    #[test]
    fn posteriors_stay_open_under_saturation() {
        let mut logits = [0.0; NUM_LABELS];
        logits[0] = 800.0;
        logits[1] = -800.0;
        logits[2] = 40.0;
        let o = sigmoid_all(&logits);
        assert!(o.iter().all(|&v| v > 0.0 && v < 1.0));
        assert_eq!(o[3], 0.5);
        assert!(o[2] < 1.0 && o[2] >= o[0]);
    }

    #[test]
    fn label_vector_exclusivity() {
        let mut set = BTreeSet::new();
        set.insert(TopicLabel::OUT_OF_DOMAIN);
        assert!(LabelVector::from_labels(&set).is_ok());
        set.insert(TopicLabel::new(0).unwrap());
        assert!(LabelVector::from_labels(&set).is_err());
    }

    #[test]
    fn micro_f1_counts() {
        let mut y = LabelVector::default();
        y.0[2] = true;
        let mut o = [0.1; 12];
        o[2] = 0.9;
        assert_eq!(micro_f1(&[o], &[y]), 1.0);
        o[5] = 0.7;
        // tp 1, fp 1 → 2/3
        assert!((micro_f1(&[o], &[y]) - 2.0 / 3.0).abs() < 1e-15);
    }
}
