//! Contextual classifiers over the ordered segments of one document.
//!
//! [`BiGruModel`] encodes the sequence with forward and backward GRUs and
//! classifies each `h_i = f_i ⊕ b_i`. [`AttentionModel`] replaces each
//! segment vector by a convex combination of its windowed neighbours, with
//! weights from an additive alignment network queried by the segment itself
//! and optionally damped by a learned function of relative position. Both
//! feed the feedforward head from [`crate::classifiers`]. Context never
//! crosses document boundaries.

mod attention;
mod bigru;
mod gru;

use alloc::vec::Vec;

pub use attention::{
    attention_scores, attention_weights, contextual_vector, gate_value, AttentionModel,
    ContextWindow, PositionGate,
};
pub use bigru::{BiGruEncoder, BiGruModel};
pub use gru::{GruCell, GruStep};

use crate::classifiers::training::{fit, TrainLog, TrainOptions};
use crate::classifiers::{HeadSpec, LabelVector};
use crate::corpus::NUM_LABELS;
use crate::numcore::Rng;
use crate::{Error, Result};

/// Feature vectors and targets of one document, in segment order.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentExample {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<LabelVector>,
}

impl DocumentExample {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContextVariant {
    BiGru { width: usize },
    Attention { width: usize, window: ContextWindow, gated: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContextualModel {
    BiGru(BiGruModel),
    Attention(AttentionModel),
}

impl ContextualModel {
    pub fn new(variant: ContextVariant, input_dim: usize, head: HeadSpec, rng: &mut Rng) -> Self {
        match variant {
            ContextVariant::BiGru { width } => {
                ContextualModel::BiGru(BiGruModel::new(input_dim, width, head, rng))
            }
            ContextVariant::Attention { width, window, gated } => ContextualModel::Attention(
                AttentionModel::new(input_dim, width, head, window, gated, rng),
            ),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ContextualModel::BiGru(m) => m.input_dim(),
            ContextualModel::Attention(m) => m.input_dim(),
        }
    }
}

fn check_units(units: &[DocumentExample], what: &str) -> Result<()> {
    for u in units {
        if u.xs.len() != u.ys.len() {
            return Err(Error::DimensionMismatch {
                expected: u.xs.len(),
                found: u.ys.len(),
            });
        }
        if u.ys.iter().any(|y| y.is_empty()) {
            return Err(Error::UnlabeledSegment(alloc::format!("in {what} document")));
        }
    }
    Ok(())
}

/// Initialises the variant from `rng` and trains with minibatches of
/// documents, returning the validation-best snapshot.
pub fn train_contextual(
    train: &[DocumentExample],
    validation: &[DocumentExample],
    variant: ContextVariant,
    head: HeadSpec,
    opts: &TrainOptions,
    rng: &mut Rng,
) -> Result<(ContextualModel, TrainLog)> {
    check_units(train, "training")?;
    check_units(validation, "validation")?;
    let input_dim = head.input_dim;
    match ContextualModel::new(variant, input_dim, head, rng) {
        ContextualModel::BiGru(m) => {
            let (m, log) = fit(m, train, validation, opts, rng)?;
            Ok((ContextualModel::BiGru(m), log))
        }
        ContextualModel::Attention(m) => {
            let (m, log) = fit(m, train, validation, opts, rng)?;
            Ok((ContextualModel::Attention(m), log))
        }
    }
}

/// Per-segment posteriors of one document.
pub fn predict_contextual(model: &ContextualModel, xs: &[Vec<f64>]) -> Result<Vec<[f64; NUM_LABELS]>> {
    match model {
        ContextualModel::BiGru(m) => m.predict_document(xs),
        ContextualModel::Attention(m) => m.predict_document(xs),
    }
}

#[cfg(test)]
mod tests;
