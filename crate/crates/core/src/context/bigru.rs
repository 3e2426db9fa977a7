use alloc::string::String;
use alloc::vec::Vec;

use super::gru::{GruCell, GruStep};
use super::DocumentExample;
use crate::classifiers::training::SupervisedModel;
use crate::classifiers::{bce_loss, sigmoid_all, FeedForwardHead, HeadSpec, LabelVector};
use crate::corpus::NUM_LABELS;
use crate::numcore::{ParamTensor, Parametrized, Rng};
use crate::{Error, Result};

/// Forward and backward GRUs over the segment sequence; the representation
/// of segment `i` is `f_i ⊕ b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGruEncoder {
    pub forward: GruCell,
    pub backward: GruCell,
}

impl BiGruEncoder {
    pub fn new(input_dim: usize, hidden: usize, rng: &mut Rng) -> Self {
        let forward = GruCell::new(input_dim, hidden, rng);
        let backward = GruCell::new(input_dim, hidden, rng);
        BiGruEncoder { forward, backward }
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
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

    fn run(&self, xs: &[Vec<f64>]) -> (Vec<GruStep>, Vec<GruStep>) {
        (self.forward.run(xs, false), self.backward.run(xs, true))
    }

    /// `h_1..h_n`, each of dimension twice the hidden width.
    pub fn encode(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check(xs)?;
        let (f, b) = self.run(xs);
        Ok(f.iter().zip(&b).map(|(f, b)| concat(&f.h, &b.h)).collect())
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// BiGRU encoder followed by the feedforward head on each `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGruModel {
    pub encoder: BiGruEncoder,
    pub head: FeedForwardHead,
}

impl BiGruModel {
    /// `head.input_dim` is overwritten with twice the GRU width.
    pub fn new(input_dim: usize, gru_width: usize, head: HeadSpec, rng: &mut Rng) -> Self {
        let head = FeedForwardHead::new(
            HeadSpec {
                input_dim: 2 * gru_width,
                ..head
            },
            rng,
        );
        let encoder = BiGruEncoder::new(input_dim, gru_width, rng);
        BiGruModel { encoder, head }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn predict_document(&self, xs: &[Vec<f64>]) -> Result<Vec<[f64; NUM_LABELS]>> {
        Ok(self
            .encoder
            .encode(xs)?
            .iter()
            .map(|h| self.head.posteriors(h))
            .collect())
    }

    /// Summed loss over the document; accumulates gradients.
    pub fn document_backward(
        &mut self,
        xs: &[Vec<f64>],
        ys: &[LabelVector],
        mut rng: Option<&mut Rng>,
    ) -> Result<f64> {
        self.encoder.check(xs)?;
        let (fs, bs) = self.encoder.run(xs);
        let width = self.encoder.hidden();
        let mut loss = 0.0;
        let mut dfs = Vec::with_capacity(xs.len());
        let mut dbs = Vec::with_capacity(xs.len());
        for i in 0..xs.len() {
            let h = concat(&fs[i].h, &bs[i].h);
            let cache = self.head.forward(&h, rng.as_deref_mut());
            let o = sigmoid_all(&cache.logits);
            let y = ys[i].targets();
            loss += bce_loss(&o, &y);
            let dlogits: Vec<f64> = o.iter().zip(&y).map(|(o, y)| o - y).collect();
            let dh = self.head.backward(&cache, &dlogits, true).expect("input gradient");
            dbs.push(dh[width..].to_vec());
            let mut df = dh;
            df.truncate(width);
            dfs.push(df);
        }
        self.encoder.forward.run_backward(xs, &fs, &dfs, false);
        self.encoder.backward.run_backward(xs, &bs, &dbs, true);
        Ok(loss)
    }

    pub fn document_loss(&self, xs: &[Vec<f64>], ys: &[LabelVector]) -> Result<f64> {
        let post = self.predict_document(xs)?;
        Ok(post.iter().zip(ys).map(|(o, y)| bce_loss(o, &y.targets())).sum())
    }
}

impl Parametrized for BiGruModel {
    fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        let mut v = self.head.named_params("head");
        v.extend(self.encoder.forward.named_params("gru_f"));
        v.extend(self.encoder.backward.named_params("gru_b"));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut v = self.head.params_mut();
        v.extend(self.encoder.forward.params_mut());
        v.extend(self.encoder.backward.params_mut());
        v
    }
}

impl SupervisedModel for BiGruModel {
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
