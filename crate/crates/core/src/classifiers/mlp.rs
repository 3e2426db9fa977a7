use alloc::string::String;
use alloc::vec::Vec;

use super::training::{fit, SupervisedModel, TrainLog, TrainOptions};
use super::{bce_loss, sigmoid_all, FeedForwardHead, HeadSpec, LabelVector};
use crate::corpus::NUM_LABELS;
use crate::numcore::{ParamTensor, Parametrized, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentExample {
    pub x: Vec<f64>,
    pub y: LabelVector,
}

/// Feedforward network on a single segment vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub head: FeedForwardHead,
}

impl MlpModel {
    pub fn new(spec: HeadSpec, rng: &mut Rng) -> Self {
        MlpModel {
            head: FeedForwardHead::new(spec, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.head.spec.input_dim
    }

    /// Gradient of the per-segment loss for one example.
    pub fn example_backward(&mut self, ex: &SegmentExample, rng: Option<&mut Rng>) -> f64 {
        let cache = self.head.forward(&ex.x, rng);
        let o = sigmoid_all(&cache.logits);
        let y = ex.y.targets();
        let dlogits: Vec<f64> = o.iter().zip(&y).map(|(o, y)| o - y).collect();
        self.head.backward(&cache, &dlogits, false);
        bce_loss(&o, &y)
    }

    pub fn example_loss(&self, ex: &SegmentExample) -> f64 {
        bce_loss(&self.head.posteriors(&ex.x), &ex.y.targets())
    }
}

impl Parametrized for MlpModel {
    fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        self.head.named_params("head")
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.head.params_mut()
    }
}

impl SupervisedModel for MlpModel {
    type Unit = SegmentExample;

    fn accumulate(&mut self, unit: &SegmentExample, rng: &mut Rng) -> Result<(f64, usize)> {
        if unit.x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: unit.x.len(),
            });
        }
        Ok((self.example_backward(unit, Some(rng)), 1))
    }

    fn evaluate_loss(&self, unit: &SegmentExample) -> (f64, usize) {
        (self.example_loss(unit), 1)
    }

    fn predict_unit(&self, unit: &SegmentExample) -> Vec<[f64; NUM_LABELS]> {
        alloc::vec![self.head.posteriors(&unit.x)]
    }

    fn unit_labels(unit: &SegmentExample) -> &[LabelVector] {
        core::slice::from_ref(&unit.y)
    }
}

/// Initialises from `rng`, then trains with minibatches of segments and
/// returns the validation-best snapshot.
pub fn train_mlp(
    train: &[SegmentExample],
    validation: &[SegmentExample],
    spec: HeadSpec,
    opts: &TrainOptions,
    rng: &mut Rng,
) -> Result<(MlpModel, TrainLog)> {
    let model = MlpModel::new(spec, rng);
    fit(model, train, validation, opts, rng)
}

pub fn predict_mlp(model: &MlpModel, x: &[f64]) -> Result<[f64; NUM_LABELS]> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: x.len(),
        });
    }
    Ok(model.head.posteriors(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::training::{validation_metric, LrSchedule, SelectionMetric};
    use crate::math;
    use crate::numcore::{grad_check, GradCheckOptions};
    use alloc::vec;

    fn spec(input_dim: usize, width: usize, layers: usize) -> HeadSpec {
        HeadSpec {
            input_dim,
            hidden_width: width,
            hidden_layers: layers,
            dropout: 0.0,
        }
    }

    fn random_examples(n: usize, dim: usize, rng: &mut Rng) -> Vec<SegmentExample> {
        (0..n)
            .map(|_| {
                let k = rng.below(NUM_LABELS);
                let mut x: Vec<f64> = (0..dim).map(|_| 0.3 * rng.normal()).collect();
                x[k % dim] += 1.5;
                let mut y = LabelVector::default();
                y.0[k] = true;
                SegmentExample { x, y }
            })
            .collect()
    }

    #[test]
    fn zero_parameters_give_one_half() {
        let m = MlpModel {
            head: FeedForwardHead::zeros(spec(4, 3, 2)),
        };
        assert_eq!(predict_mlp(&m, &[1.0, -2.0, 0.3, 4.0]).unwrap(), [0.5; 12]);
        assert!(predict_mlp(&m, &[1.0]).is_err());
    }

    #[test]
    fn outputs_are_probabilities() {
        let mut rng = Rng::new(8);
        let m = MlpModel::new(spec(6, 16, 1), &mut rng);
        for _ in 0..50 {
            let x: Vec<f64> = (0..6).map(|_| 5.0 * rng.normal()).collect();
            assert!(predict_mlp(&m, &x).unwrap().iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn hand_forward_one_hidden_unit() {
        let mut m = MlpModel {
            head: FeedForwardHead::zeros(spec(2, 1, 1)),
        };
        {
            let mut p = m.head.params_mut();
            p[0].values = vec![0.5, -1.0]; // hidden weight
            p[1].values = vec![0.25]; // hidden bias
            for (k, v) in p[2].values.iter_mut().enumerate() {
                *v = k as f64 * 0.1 - 0.5;
            }
            for (k, v) in p[3].values.iter_mut().enumerate() {
                *v = 0.01 * k as f64;
            }
        }
        let x = [2.0, 0.5];
        // hidden = relu(0.5*2 - 1*0.5 + 0.25) = 0.75
        let o = predict_mlp(&m, &x).unwrap();
        for k in 0..NUM_LABELS {
            let logit = (k as f64 * 0.1 - 0.5) * 0.75 + 0.01 * k as f64;
            assert!((o[k] - math::sigmoid(logit)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..3 {
            let mut rng = Rng::new(seed);
            let mut m = MlpModel::new(spec(8, 8, 2), &mut rng);
            let ex = random_examples(3, 8, &mut rng);
            let err = grad_check(
                &mut m,
                |m| {
                    m.zero_grad();
                    ex.iter().map(|e| m.example_backward(e, None)).sum()
                },
                |m| ex.iter().map(|e| m.example_loss(e)).sum(),
                GradCheckOptions {
                    max_coords_per_tensor: None,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let mut rng = Rng::new(21);
        let train = random_examples(300, 10, &mut rng);
        let val = random_examples(60, 10, &mut rng);
        let mut opts = TrainOptions::new(15, 32);
        opts.adam.alpha = 3e-3;
        let s = HeadSpec {
            dropout: 0.25,
            ..spec(10, 32, 2)
        };
        let (m1, log) = train_mlp(&train, &val, s, &opts, &mut Rng::new(5)).unwrap();
        let final_loss = crate::classifiers::training::mean_loss(&m1, &train);
        assert!(final_loss < log.initial_loss, "{final_loss} vs {}", log.initial_loss);
        let (m2, _) = train_mlp(&train, &val, s, &opts, &mut Rng::new(5)).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn best_snapshot_survives_late_divergence() {
        let mut rng = Rng::new(33);
        let train = random_examples(200, 12, &mut rng);
        let val = random_examples(50, 12, &mut rng);
        let mut opts = TrainOptions::new(12, 20);
        opts.adam.alpha = 1e-2;
        opts.lr_schedule = LrSchedule::Spike {
            epoch: 12,
            factor: 1000.0,
        };
        let (m, log) = train_mlp(&train, &val, spec(12, 32, 1), &opts, &mut Rng::new(1)).unwrap();
        let last = log.epochs.last().unwrap().validation_metric;
        let best = log.epochs[log.best_epoch - 1].validation_metric;
        assert!(log.best_epoch < 12, "{:?}", log.epochs);
        assert!(best > last, "best {best} last {last}");
        let returned = validation_metric(&m, &val, SelectionMetric::MicroF1);
        assert_eq!(returned, best);
    }

    #[test]
    fn zero_epochs_rejected() {
        let mut rng = Rng::new(0);
        let ex = random_examples(4, 3, &mut rng);
        let r = train_mlp(&ex, &ex, spec(3, 4, 1), &TrainOptions::new(0, 4), &mut rng);
        assert!(matches!(r, Err(Error::NoTrainingPerformed)));
    }
}
