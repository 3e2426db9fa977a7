use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::DocumentExample;
use crate::classifiers::training::SupervisedModel;
use crate::classifiers::{bce_loss, sigmoid_all, FeedForwardHead, HeadSpec, LabelVector};
use crate::corpus::NUM_LABELS;
use crate::math;
use crate::numcore::{init_params, ParamTensor, Parametrized, Rng};
use crate::{Error, Result};

/// Numbers of left and right neighbours a target attends to; `None` is
/// unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContextWindow {
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl ContextWindow {
    pub fn symmetric(k: usize) -> Self {
        ContextWindow {
            left: Some(k),
            right: Some(k),
        }
    }

    pub fn unbounded() -> Self {
        ContextWindow {
            left: None,
            right: None,
        }
    }

    /// Inclusive 0-based index range attended by target `i` of `n`.
    pub fn range(&self, i: usize, n: usize) -> (usize, usize) {
        let lo = self.left.map_or(0, |l| i.saturating_sub(l));
        let hi = self.right.map_or(n - 1, |r| (i + r).min(n - 1));
        (lo, hi)
    }
}

/// Relative-position gate `d(i, j) = σ(w2 tanh(w1 |i - j| + b1) + b2)` for
/// `j ≠ i` and `d(i, i) = 1`. Parameters are stored as `[w1, w2, b1, b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionGate {
    pub params: ParamTensor,
}

impl Default for PositionGate {
    fn default() -> Self {
        PositionGate::new(1.0, 1.0, 0.0, 0.0)
    }
}

impl PositionGate {
    pub fn new(w1: f64, w2: f64, b1: f64, b2: f64) -> Self {
        PositionGate {
            params: ParamTensor::from_values(&[4], vec![w1, w2, b1, b2]),
        }
    }

    fn hidden(&self, distance: usize) -> f64 {
        let p = &self.params.values;
        math::tanh(p[0] * distance as f64 + p[2])
    }

    pub fn value(&self, distance: usize) -> f64 {
        if distance == 0 {
            return 1.0;
        }
        let p = &self.params.values;
        math::sigmoid(p[1] * self.hidden(distance) + p[3])
    }

    /// Accumulates `dL/dp` given `g = dL/d(ln d)` at a nonzero distance.
    fn backward_log(&mut self, distance: usize, g: f64) {
        let t = self.hidden(distance);
        let ds = g * (1.0 - self.value(distance));
        let w2 = self.params.values[1];
        let dt = ds * w2 * (1.0 - t * t);
        let grad = &mut self.params.grad;
        grad[0] += dt * distance as f64;
        grad[1] += ds * t;
        grad[2] += dt;
        grad[3] += ds;
    }
}

pub fn gate_value(gate: &PositionGate, i: usize, j: usize) -> f64 {
    gate.value(i.abs_diff(j))
}

/// Additive alignment `e_ij = wᵀ ReLU(W1 x_i + W2 x_j + b1) + b2`, softmax
/// (optionally position-gated) over a window around `i`, and the
/// feedforward head applied to `c_i = Σ_j α_ij x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionModel {
    pub w1: ParamTensor,
    pub w2: ParamTensor,
    pub w: ParamTensor,
    pub b1: ParamTensor,
    pub b2: ParamTensor,
    pub window: ContextWindow,
    pub gate: Option<PositionGate>,
    pub head: FeedForwardHead,
}

/// Per-target forward values needed by the backward pass.
struct Target {
    lo: usize,
    /// Alignment pre-activations `W1 x_i + W2 x_j + b1`, one per window slot.
    pre: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    context: Vec<f64>,
}

impl AttentionModel {
    /// The head is initialised first so that, at equal seeds, the head
    /// matches the one of a freshly initialised MLP with the same spec.
    /// `head.input_dim` is overwritten with `input_dim`.
    pub fn new(
        input_dim: usize,
        width: usize,
        head: HeadSpec,
        window: ContextWindow,
        gated: bool,
        rng: &mut Rng,
    ) -> Self {
        let head = FeedForwardHead::new(HeadSpec { input_dim, ..head }, rng);
        let w1 = init_params(&[width, input_dim], rng);
        let w2 = init_params(&[width, input_dim], rng);
        let w = init_params(&[1, width], rng);
        AttentionModel {
            w1,
            w2,
            w: ParamTensor::from_values(&[width], w.values),
            b1: ParamTensor::zeros(&[width]),
            b2: ParamTensor::zeros(&[1]),
            window,
            gate: gated.then(PositionGate::default),
            head,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn width(&self) -> usize {
        self.w1.rows()
    }

    fn check(&self, xs: &[Vec<f64>]) -> Result<()> {
        if xs.is_empty() {
            return Err(Error::EmptyDocument(String::new()));
        }
        for x in xs {
            if x.len() != self.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim(),
                    found: x.len(),
                });
            }
        }
        Ok(())
    }

    /// `W1 x_j` and `W2 x_j` for every segment.
    fn projections(&self, xs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            xs.iter().map(|x| self.w1.matvec(x)).collect(),
            xs.iter().map(|x| self.w2.matvec(x)).collect(),
        )
    }

    fn target(&self, xs: &[Vec<f64>], p: &[Vec<f64>], q: &[Vec<f64>], i: usize) -> Target {
        let (lo, hi) = self.window.range(i, xs.len());
        let mut pre = Vec::with_capacity(hi - lo + 1);
        let mut scores = Vec::with_capacity(hi - lo + 1);
        for j in lo..=hi {
            let a: Vec<f64> = (0..self.width())
                .map(|k| p[i][k] + q[j][k] + self.b1.values[k])
                .collect();
            let e: f64 = a
                .iter()
                .zip(&self.w.values)
                .map(|(&a, w)| w * math::relu(a))
                .sum::<f64>()
                + self.b2.values[0];
            pre.push(a);
            scores.push(e);
        }
        let alpha = attention_weights(&scores, self.gate.as_ref(), i, lo);
        let mut context = vec![0.0; self.input_dim()];
        for (slot, &a) in alpha.iter().enumerate() {
            let x = &xs[lo + slot];
            context.iter_mut().zip(x).for_each(|(c, x)| *c += a * x);
        }
        Target {
            lo,
            pre,
            alpha,
            context,
        }
    }

    fn contexts(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (p, q) = self.projections(xs);
        (0..xs.len())
            .map(|i| self.target(xs, &p, &q, i).context)
            .collect()
    }

    pub fn predict_document(&self, xs: &[Vec<f64>]) -> Result<Vec<[f64; NUM_LABELS]>> {
        self.check(xs)?;
        Ok(self
            .contexts(xs)
            .iter()
            .map(|c| self.head.posteriors(c))
            .collect())
    }

    /// Summed loss over the document; accumulates gradients.
    pub fn document_backward(
        &mut self,
        xs: &[Vec<f64>],
        ys: &[LabelVector],
        mut rng: Option<&mut Rng>,
    ) -> Result<f64> {
        self.check(xs)?;
        let n = xs.len();
        let width = self.width();
        let (p, q) = self.projections(xs);
        let mut dp = vec![vec![0.0; width]; n];
        let mut dq = vec![vec![0.0; width]; n];
        let mut loss = 0.0;
        for i in 0..n {
            let t = self.target(xs, &p, &q, i);
            let cache = self.head.forward(&t.context, rng.as_deref_mut());
            let o = sigmoid_all(&cache.logits);
            let y = ys[i].targets();
            loss += bce_loss(&o, &y);
            let dlogits: Vec<f64> = o.iter().zip(&y).map(|(o, y)| o - y).collect();
            let dc = self.head.backward(&cache, &dlogits, true).expect("input gradient");
            if t.alpha.len() == 1 {
                continue;
            }
            // α = softmax(ln d + e): du_j = α_j (dα_j - Σ_k α_k dα_k)
            let dalpha: Vec<f64> = (0..t.alpha.len())
                .map(|s| dc.iter().zip(&xs[t.lo + s]).map(|(g, x)| g * x).sum())
                .collect();
            let mean: f64 = t.alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
            for (s, a) in t.pre.iter().enumerate() {
                let j = t.lo + s;
                let du = t.alpha[s] * (dalpha[s] - mean);
                if let Some(g) = self.gate.as_mut() {
                    if j != i {
                        g.backward_log(i.abs_diff(j), du);
                    }
                }
                self.b2.grad[0] += du;
                for k in 0..width {
                    if a[k] > 0.0 {
                        self.w.grad[k] += du * a[k];
                        let dpre = du * self.w.values[k];
                        self.b1.grad[k] += dpre;
                        dp[i][k] += dpre;
                        dq[j][k] += dpre;
                    }
                }
            }
        }
        for (j, x) in xs.iter().enumerate() {
            self.w1.add_outer_grad(&dp[j], x);
            self.w2.add_outer_grad(&dq[j], x);
        }
        Ok(loss)
    }

    pub fn document_loss(&self, xs: &[Vec<f64>], ys: &[LabelVector]) -> Result<f64> {
        let post = self.predict_document(xs)?;
        Ok(post.iter().zip(ys).map(|(o, y)| bce_loss(o, &y.targets())).sum())
    }
}

/// Alignment scores of target `i` (0-based) against its window.
pub fn attention_scores(model: &AttentionModel, xs: &[Vec<f64>], i: usize) -> Vec<f64> {
    let (lo, hi) = model.window.range(i, xs.len());
    let h1 = model.w1.matvec(&xs[i]);
    (lo..=hi)
        .map(|j| {
            let h2 = model.w2.matvec(&xs[j]);
            (0..model.width())
                .map(|k| model.w.values[k] * math::relu(h1[k] + h2[k] + model.b1.values[k]))
                .sum::<f64>()
                + model.b2.values[0]
        })
        .collect()
}

/// Softmax of `scores` over a window starting at position `lo`, each term
/// weighted by the gate value `d(i, j)` when a gate is given.
pub fn attention_weights(scores: &[f64], gate: Option<&PositionGate>, i: usize, lo: usize) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(s, &e)| {
            let d = gate.map_or(1.0, |g| gate_value(g, i, lo + s));
            d * math::exp(e - max)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    w
}

/// `c_i = Σ_j α_ij x_j` over the window of target `i`.
pub fn contextual_vector(model: &AttentionModel, xs: &[Vec<f64>], i: usize) -> Vec<f64> {
    let (p, q) = model.projections(xs);
    model.target(xs, &p, &q, i).context
}

impl Parametrized for AttentionModel {
    fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        let mut v = self.head.named_params("head");
        v.push(("attn.w1".into(), &self.w1));
        v.push(("attn.w2".into(), &self.w2));
        v.push(("attn.w".into(), &self.w));
        v.push(("attn.b1".into(), &self.b1));
        v.push(("attn.b2".into(), &self.b2));
        if let Some(g) = &self.gate {
            v.push(("gate".into(), &g.params));
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut v = self.head.params_mut();
        v.push(&mut self.w1);
        v.push(&mut self.w2);
        v.push(&mut self.w);
        v.push(&mut self.b1);
        v.push(&mut self.b2);
        if let Some(g) = &mut self.gate {
            v.push(&mut g.params);
        }
        v
    }
}

impl SupervisedModel for AttentionModel {
    type Unit = DocumentExample;

    fn accumulate(&mut self, unit: &DocumentExample, rng: &mut Rng) -> Result<(f64, usize)> {
        let loss = self.document_backward(&unit.xs, &unit.ys, Some(rng))?;
        Ok((loss, unit.len()))
    }

    fn evaluate_loss(&self, unit: &DocumentExample) -> (f64, usize) {
        (self.document_loss(&unit.xs, &unit.ys).unwrap_or(f64::NAN), unit.len())
    }

    fn predict_unit(&self, unit: &DocumentExample) -> Vec<[f64; NUM_LABELS]> {
        self.predict_document(&unit.xs).unwrap_or_default()
    }

    fn unit_labels(unit: &DocumentExample) -> &[LabelVector] {
        &unit.ys
    }
}
