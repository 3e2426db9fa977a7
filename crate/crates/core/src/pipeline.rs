//! End-to-end systems: fitted features plus one trained topic model.
//!
//! All randomness derives from [`ModelConfig::seed`]: stream 0 drives LSA,
//! stream 1 the validation hold-out, stream 2 model initialisation and
//! training.

use alloc::vec::Vec;

use crate::classifiers::training::{SelectionMetric, TrainLog, TrainOptions};
use crate::classifiers::{
    predict_svm, train_mlp, train_svm, HeadSpec, LabelVector, MlpModel, SegmentExample, SvmSet,
};
use crate::context::{
    predict_contextual, train_contextual, ContextVariant, ContextWindow, ContextualModel,
    DocumentExample,
};
use crate::corpus::{Document, NUM_LABELS};
use crate::eval::{run_crossval, CrossvalReport, FoldGranularity};
use crate::features::{FeatureOptions, FeaturePipeline, LsaOptions, TfIdfOptions};
use crate::numcore::{AdamConfig, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Standard,
    Noisy,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Standard => "standard",
            Preset::Noisy => "noisy",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "standard" => Some(Preset::Standard),
            "noisy" => Some(Preset::Noisy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    Svm,
    #[default]
    Mlp,
    BiGru,
    Attention,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Svm => "svm",
            Variant::Mlp => "mlp",
            Variant::BiGru => "bigru",
            Variant::Attention => "attn",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "svm" => Some(Variant::Svm),
            "mlp" => Some(Variant::Mlp),
            "bigru" => Some(Variant::BiGru),
            "attn" => Some(Variant::Attention),
            _ => None,
        }
    }
}

/// Every knob of feature extraction and model training.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub preset: Preset,
    pub variant: Variant,
    /// `None` trains on raw tf-idf.
    pub lsa_dim: Option<usize>,
    pub music: bool,
    pub min_token_length: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub hidden_width: usize,
    pub mlp_hidden_layers: usize,
    /// Head depth on top of the BiGRU; 0 feeds `h_i` to the output layer.
    pub rnn_head_layers: usize,
    pub attention_head_layers: usize,
    pub dropout: f64,
    pub gru_width: usize,
    pub attention_width: usize,
    pub window: ContextWindow,
    pub gate: bool,
    pub epochs: usize,
    pub segment_batch: usize,
    pub document_batch: usize,
    pub adam: AdamConfig,
    pub selection: SelectionMetric,
    /// Global gradient-norm cap for the BiGRU.
    pub rnn_clip_norm: Option<f64>,
    /// Fraction of training documents held out for model selection when no
    /// validation corpus is given.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn preset(preset: Preset, variant: Variant) -> Self {
        let (lsa, lambda, mlp_layers, rnn_layers, attn_layers, dropout) = match preset {
            Preset::Standard => (900, 1e-4, 2, 1, 2, 0.25),
            Preset::Noisy => (300, 1e-3, 1, 0, 1, 0.5),
        };
        ModelConfig {
            preset,
            variant,
            lsa_dim: Some(lsa),
            music: true,
            min_token_length: TfIdfOptions::default().min_token_length,
            svm_lambda: lambda,
            svm_epochs: 30,
            hidden_width: 512,
            mlp_hidden_layers: mlp_layers,
            rnn_head_layers: rnn_layers,
            attention_head_layers: attn_layers,
            dropout,
            gru_width: 512,
            attention_width: 512,
            window: ContextWindow::symmetric(1),
            gate: false,
            epochs: 50,
            segment_batch: 256,
            document_batch: 6,
            adam: AdamConfig::default(),
            selection: SelectionMetric::MicroF1,
            rnn_clip_norm: Some(5.0),
            validation_fraction: 0.1,
            seed: 0,
        }
    }

    pub fn feature_options(&self) -> FeatureOptions {
        FeatureOptions {
            tfidf: TfIdfOptions {
                min_token_length: self.min_token_length,
                ..TfIdfOptions::default()
            },
            lsa_dim: self.lsa_dim,
            lsa: LsaOptions::default(),
            music: self.music,
            seed: Rng::new(self.seed).derive(0).seed(),
        }
    }

    fn head(&self, input_dim: usize, layers: usize) -> HeadSpec {
        HeadSpec {
            input_dim,
            hidden_width: self.hidden_width,
            hidden_layers: layers,
            dropout: self.dropout,
        }
    }

    fn train_options(&self, batch: usize, clip: Option<f64>) -> TrainOptions {
        TrainOptions {
            adam: self.adam,
            selection: self.selection,
            clip_norm: clip,
            ..TrainOptions::new(self.epochs, batch)
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::preset(Preset::Standard, Variant::Mlp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopicModel {
    Svm(SvmSet),
    Mlp(MlpModel),
    Contextual(ContextualModel),
}

/// Fitted features and a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSystem {
    pub features: FeaturePipeline,
    pub model: TopicModel,
}

impl TrainedSystem {
    pub fn predict_document(&self, doc: &Document) -> Result<Vec<[f64; NUM_LABELS]>> {
        let xs = self.features.transform_document(doc)?;
        match &self.model {
            TopicModel::Svm(m) => xs.iter().map(|x| predict_svm(m, x)).collect(),
            TopicModel::Mlp(m) => xs.iter().map(|x| crate::classifiers::predict_mlp(m, x)).collect(),
            TopicModel::Contextual(m) => predict_contextual(m, &xs),
        }
    }

    pub fn predict_corpus(&self, docs: &[Document]) -> Result<Vec<Vec<[f64; NUM_LABELS]>>> {
        docs.iter().map(|d| self.predict_document(d)).collect()
    }
}

fn labels(doc: &Document) -> Result<Vec<LabelVector>> {
    doc.segments
        .iter()
        .map(|s| {
            if s.labels.is_empty() {
                return Err(Error::UnlabeledSegment(s.segment_id.clone()));
            }
            LabelVector::from_labels(&s.labels).map_err(|_| Error::ExclusiveLabel {
                segment_id: s.segment_id.clone(),
            })
        })
        .collect()
}

fn document_examples(features: &FeaturePipeline, docs: &[Document]) -> Result<Vec<DocumentExample>> {
    docs.iter()
        .map(|d| {
            Ok(DocumentExample {
                xs: features.transform_document(d)?,
                ys: labels(d)?,
            })
        })
        .collect()
}

fn segment_examples(docs: &[DocumentExample]) -> Vec<SegmentExample> {
    docs.iter()
        .flat_map(|d| {
            d.xs.iter()
                .zip(&d.ys)
                .map(|(x, &y)| SegmentExample { x: x.clone(), y })
        })
        .collect()
}

/// Splits off `fraction` of the documents (at least one, and never all).
pub fn hold_out(docs: &[Document], fraction: f64, seed: u64) -> Result<(Vec<Document>, Vec<Document>)> {
    if docs.len() < 2 {
        return Err(Error::TooFewDocuments {
            needed: 2,
            found: docs.len(),
        });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "validation fraction {fraction} outside (0, 1)"
        )));
    }
    let n_val = (libm::round(docs.len() as f64 * fraction) as usize).clamp(1, docs.len() - 1);
    let order = Rng::new(seed).derive(1).permutation(docs.len());
    let mut is_val = alloc::vec![false; docs.len()];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (d, v) in docs.iter().zip(is_val) {
        if v { &mut val } else { &mut train }.push(d.clone());
    }
    Ok((train, val))
}

/// Fits features on the training documents and trains the configured
/// variant. Neural variants select their snapshot on `validation`, or on a
/// hold-out of `train` when it is `None`.
pub fn train_system(
    train: &[Document],
    validation: Option<&[Document]>,
    cfg: &ModelConfig,
) -> Result<(TrainedSystem, Option<TrainLog>)> {
    if train.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let needs_validation = cfg.variant != Variant::Svm;
    if needs_validation && cfg.epochs == 0 {
        return Err(Error::NoTrainingPerformed);
    }
    let (train_docs, val_docs) = match (needs_validation, validation) {
        (false, _) => (train.to_vec(), Vec::new()),
        (true, Some(v)) => (train.to_vec(), v.to_vec()),
        (true, None) => hold_out(train, cfg.validation_fraction, cfg.seed)?,
    };
    let features = FeaturePipeline::fit(&train_docs, &cfg.feature_options())?;
    let train_ex = document_examples(&features, &train_docs)?;
    let val_ex = document_examples(&features, &val_docs)?;
    let dim = features.dim();
    let mut rng = Rng::new(cfg.seed).derive(2);

    let (model, log) = match cfg.variant {
        Variant::Svm => {
            let seg = segment_examples(&train_ex);
            let xs: Vec<Vec<f64>> = seg.iter().map(|e| e.x.clone()).collect();
            let ys: Vec<LabelVector> = seg.iter().map(|e| e.y).collect();
            let m = train_svm(&xs, &ys, cfg.svm_lambda, cfg.svm_epochs, &mut rng)?;
            (TopicModel::Svm(m), None)
        }
        Variant::Mlp => {
            let (m, log) = train_mlp(
                &segment_examples(&train_ex),
                &segment_examples(&val_ex),
                cfg.head(dim, cfg.mlp_hidden_layers),
                &cfg.train_options(cfg.segment_batch, None),
                &mut rng,
            )?;
            (TopicModel::Mlp(m), Some(log))
        }
        Variant::BiGru | Variant::Attention => {
            let (variant, head, clip) = if cfg.variant == Variant::BiGru {
                (
                    ContextVariant::BiGru { width: cfg.gru_width },
                    cfg.head(dim, cfg.rnn_head_layers),
                    cfg.rnn_clip_norm,
                )
            } else {
                (
                    ContextVariant::Attention {
                        width: cfg.attention_width,
                        window: cfg.window,
                        gated: cfg.gate,
                    },
                    cfg.head(dim, cfg.attention_head_layers),
                    None,
                )
            };
            let (m, log) = train_contextual(
                &train_ex,
                &val_ex,
                variant,
                head,
                &cfg.train_options(cfg.document_batch, clip),
                &mut rng,
            )?;
            (TopicModel::Contextual(m), Some(log))
        }
    };
    Ok((TrainedSystem { features, model }, log))
}

/// k-fold cross-validation of the configured system; features are refit on
/// every training part and validation is held out of it.
pub fn crossval_system(
    corpus: &[Document],
    cfg: &ModelConfig,
    k: usize,
    granularity: FoldGranularity,
) -> Result<CrossvalReport> {
    run_crossval(corpus, k, cfg.seed, granularity, |_, train, test| {
        let (system, _) = train_system(train, None, cfg)?;
        system.predict_corpus(test)
    })
}
