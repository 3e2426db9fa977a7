//! Miniature models for finite-difference gradient checks of every trainable
//! variant: 8-dimensional inputs, width 8, one hidden head layer, documents of
//! 4 segments.

use alloc::vec::Vec;

use crate::classifiers::{HeadSpec, LabelVector, MlpModel, SegmentExample};
use crate::context::{AttentionModel, BiGruModel, ContextWindow};
use crate::corpus::NUM_LABELS;
use crate::numcore::{grad_check, GradCheckOptions, Parametrized, Rng};
use crate::Result;

pub const MINI_INPUT_DIM: usize = 8;
pub const MINI_WIDTH: usize = 8;
pub const MINI_SEGMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiniModel {
    Mlp,
    BiGru,
    Attention,
    GatedAttention,
}

impl MiniModel {
    pub const ALL: [MiniModel; 4] = [
        MiniModel::Mlp,
        MiniModel::BiGru,
        MiniModel::Attention,
        MiniModel::GatedAttention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MiniModel::Mlp => "mlp",
            MiniModel::BiGru => "bigru",
            MiniModel::Attention => "attn",
            MiniModel::GatedAttention => "attn+gate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        MiniModel::ALL.into_iter().find(|m| m.name() == s)
    }
}

fn head() -> HeadSpec {
    HeadSpec {
        input_dim: MINI_INPUT_DIM,
        hidden_width: MINI_WIDTH,
        hidden_layers: 1,
        dropout: 0.0,
    }
}

fn random_document(rng: &mut Rng) -> (Vec<Vec<f64>>, Vec<LabelVector>) {
    let xs = (0..MINI_SEGMENTS)
        .map(|_| (0..MINI_INPUT_DIM).map(|_| rng.normal()).collect())
        .collect();
    let ys = (0..MINI_SEGMENTS)
        .map(|_| {
            let mut y = LabelVector::default();
            y.0[rng.below(NUM_LABELS - 1)] = true;
            if rng.bernoulli(0.3) {
                y.0[rng.below(NUM_LABELS - 1)] = true;
            }
            y
        })
        .collect();
    (xs, ys)
}

// Moves biases off zero and weights off their init so ReLU kinks and the
// default gate are not special points.
fn jitter<M: Parametrized>(m: &mut M, rng: &mut Rng) {
    for p in m.params_mut() {
        p.values.iter_mut().for_each(|v| *v += 0.3 * rng.normal());
    }
}

fn check<M: Parametrized>(
    mut m: M,
    rng: &mut Rng,
    mut backward: impl FnMut(&mut M) -> f64,
    loss: impl FnMut(&M) -> f64,
    seed: u64,
) -> Result<f64> {
    jitter(&mut m, rng);
    grad_check(
        &mut m,
        |m| {
            m.zero_grad();
            backward(m)
        },
        loss,
        GradCheckOptions {
            max_coords_per_tensor: None,
            seed,
            ..Default::default()
        },
    )
}

/// Builds the miniature model from `seed` and returns the worst relative
/// error over all of its parameter coordinates.
pub fn mini_gradcheck(kind: MiniModel, seed: u64) -> Result<f64> {
    let rng = Rng::new(seed);
    let (xs, ys) = random_document(&mut rng.derive(0));
    let mut init = rng.derive(1);
    let mut jit = rng.derive(2);
    match kind {
        MiniModel::Mlp => {
            let exs: Vec<SegmentExample> = xs
                .into_iter()
                .zip(ys)
                .map(|(x, y)| SegmentExample { x, y })
                .collect();
            check(
                MlpModel::new(head(), &mut init),
                &mut jit,
                |m| exs.iter().map(|e| m.example_backward(e, None)).sum(),
                |m| exs.iter().map(|e| m.example_loss(e)).sum(),
                seed,
            )
        }
        MiniModel::BiGru => {
            let m = BiGruModel::new(MINI_INPUT_DIM, MINI_WIDTH, head(), &mut init);
            check(
                m,
                &mut jit,
                |m| m.document_backward(&xs, &ys, None).unwrap_or(f64::NAN),
                |m| m.document_loss(&xs, &ys).unwrap_or(f64::NAN),
                seed,
            )
        }
        MiniModel::Attention | MiniModel::GatedAttention => {
            let m = AttentionModel::new(
                MINI_INPUT_DIM,
                MINI_WIDTH,
                head(),
                ContextWindow::symmetric(1),
                kind == MiniModel::GatedAttention,
                &mut init,
            );
            check(
                m,
                &mut jit,
                |m| m.document_backward(&xs, &ys, None).unwrap_or(f64::NAN),
                |m| m.document_loss(&xs, &ys).unwrap_or(f64::NAN),
                seed,
            )
        }
    }
}
