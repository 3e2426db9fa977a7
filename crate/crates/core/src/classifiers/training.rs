//! Minibatch Adam training with per-epoch validation and best-snapshot
//! selection, shared by the feedforward and contextual models.

use alloc::format;
use alloc::vec::Vec;

use super::{micro_f1, LabelVector};
use crate::corpus::NUM_LABELS;
use crate::numcore::{clip_global_norm, AdamConfig, AdamState, Parametrized, Rng};
use crate::{Error, Result};

/// Validation metric used to pick the returned snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMetric {
    /// Micro-F1 over the 12 labels at threshold 0.5.
    #[default]
    MicroF1,
    /// Type-layer average precision over the 11 in-domain labels.
    TypeAp,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Multiplies the learning rate by `factor` for one epoch (1-based).
    Spike { epoch: usize, factor: f64 },
}

impl LrSchedule {
    pub fn scale(&self, epoch: usize) -> f64 {
        match *self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Spike { epoch: e, factor } if e == epoch => factor,
            LrSchedule::Spike { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    /// Units (segments or documents) per minibatch.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub selection: SelectionMetric,
    /// Global gradient-norm cap.
    pub clip_norm: Option<f64>,
    pub lr_schedule: LrSchedule,
}

impl TrainOptions {
    pub fn new(epochs: usize, batch_size: usize) -> Self {
        TrainOptions {
            epochs,
            batch_size,
            adam: AdamConfig::default(),
            selection: SelectionMetric::default(),
            clip_norm: None,
            lr_schedule: LrSchedule::Constant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-segment loss seen during the epoch (dropout active).
    pub train_loss: f64,
    pub validation_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Mean per-segment training loss of the initial parameters.
    pub initial_loss: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// A model trained on units of labelled segments.
pub trait SupervisedModel: Parametrized + Clone {
    type Unit;

    /// Adds this unit's loss gradient (summed over its segments) to the
    /// parameter gradients. Returns the summed loss and the segment count.
    fn accumulate(&mut self, unit: &Self::Unit, rng: &mut Rng) -> Result<(f64, usize)>;

    /// Summed inference-mode loss and segment count.
    fn evaluate_loss(&self, unit: &Self::Unit) -> (f64, usize);

    fn predict_unit(&self, unit: &Self::Unit) -> Vec<[f64; NUM_LABELS]>;

    fn unit_labels(unit: &Self::Unit) -> &[LabelVector];
}

pub fn mean_loss<M: SupervisedModel>(model: &M, units: &[M::Unit]) -> f64 {
    let (sum, n) = units
        .iter()
        .map(|u| model.evaluate_loss(u))
        .fold((0.0, 0usize), |(a, b), (l, c)| (a + l, b + c));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn validation_metric<M: SupervisedModel>(
    model: &M,
    units: &[M::Unit],
    metric: SelectionMetric,
) -> f64 {
    let mut post = Vec::new();
    let mut gold = Vec::new();
    for u in units {
        post.extend(model.predict_unit(u));
        gold.extend_from_slice(M::unit_labels(u));
    }
    match metric {
        SelectionMetric::MicroF1 => micro_f1(&post, &gold),
        SelectionMetric::TypeAp => crate::eval::type_ap_from_labels(&post, &gold).unwrap_or(0.0),
    }
}

/// Runs the training loop and returns the validation-best snapshot.
pub fn fit<M: SupervisedModel>(
    mut model: M,
    train: &[M::Unit],
    validation: &[M::Unit],
    opts: &TrainOptions,
    rng: &mut Rng,
) -> Result<(M, TrainLog)> {
    if opts.epochs == 0 {
        return Err(Error::NoTrainingPerformed);
    }
    if train.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if validation.is_empty() {
        return Err(Error::EmptyValidation);
    }
    if opts.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be positive".into()));
    }
    let mut log = TrainLog {
        initial_loss: mean_loss(&model, train),
        ..Default::default()
    };
    let mut adam = AdamState::new(opts.adam);
    let mut best: Option<(f64, M)> = None;

    for epoch in 1..=opts.epochs {
        let order = rng.permutation(train.len());
        let (mut epoch_loss, mut epoch_segments) = (0.0, 0usize);
        for batch in order.chunks(opts.batch_size) {
            model.zero_grad();
            let (mut loss, mut segments) = (0.0, 0usize);
            for &i in batch {
                let (l, n) = model.accumulate(&train[i], rng)?;
                loss += l;
                segments += n;
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss diverged in epoch {epoch}")));
            }
            if segments == 0 {
                continue;
            }
            let scale = 1.0 / segments as f64;
            let mut params = model.params_mut();
            for p in params.iter_mut() {
                p.grad.iter_mut().for_each(|g| *g *= scale);
            }
            if let Some(max) = opts.clip_norm {
                clip_global_norm(&mut params, max);
            }
            adam.step_scaled(&mut params, opts.lr_schedule.scale(epoch))?;
            epoch_loss += loss;
            epoch_segments += segments;
        }
        let metric = validation_metric(&model, validation, opts.selection);
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / epoch_segments.max(1) as f64,
            validation_metric: metric,
        });
        if best.as_ref().is_none_or(|(m, _)| metric > *m) {
            best = Some((metric, model.clone()));
            log.best_epoch = epoch;
        }
    }
    let (_, mut snapshot) = best.expect("at least one epoch ran");
    // gradient buffers are scratch space, not model state
    snapshot.zero_grad();
    Ok((snapshot, log))
}
