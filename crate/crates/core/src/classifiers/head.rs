use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::NUM_LABELS;
use crate::math;
use crate::numcore::{dropout_mask, init_params, ParamTensor, Rng};

/// Shape of a feedforward head: `hidden_layers` ReLU layers of width
/// `hidden_width`, then an affine map to 12 logits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadSpec {
    pub input_dim: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub dropout: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    weight: ParamTensor,
    bias: ParamTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardHead {
    pub spec: HeadSpec,
    layers: Vec<Dense>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct HeadCache {
    /// Input of every layer (after ReLU and dropout for hidden layers).
    inputs: Vec<Vec<f64>>,
    /// Hidden pre-activations.
    pre: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
    pub logits: Vec<f64>,
}

impl FeedForwardHead {
    fn dims(spec: &HeadSpec) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(spec.hidden_layers + 1);
        let mut fan_in = spec.input_dim;
        for _ in 0..spec.hidden_layers {
            dims.push((spec.hidden_width, fan_in));
            fan_in = spec.hidden_width;
        }
        dims.push((NUM_LABELS, fan_in));
        dims
    }

    pub fn new(spec: HeadSpec, rng: &mut Rng) -> Self {
        let layers = Self::dims(&spec)
            .into_iter()
            .map(|(o, i)| Dense {
                weight: init_params(&[o, i], rng),
                bias: init_params(&[o], rng),
            })
            .collect();
        FeedForwardHead { spec, layers }
    }

    pub fn zeros(spec: HeadSpec) -> Self {
        let layers = Self::dims(&spec)
            .into_iter()
            .map(|(o, i)| Dense {
                weight: ParamTensor::zeros(&[o, i]),
                bias: ParamTensor::zeros(&[o]),
            })
            .collect();
        FeedForwardHead { spec, layers }
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &ParamTensor)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (l, d) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}.{l}.weight"), &d.weight));
            out.push((format!("{prefix}.{l}.bias"), &d.bias));
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for d in self.layers.iter_mut() {
            out.push(&mut d.weight);
            out.push(&mut d.bias);
        }
        out
    }

    /// Logits for one input. Dropout is applied after each hidden ReLU when
    /// a generator is supplied.
    pub fn forward(&self, x: &[f64], mut dropout_rng: Option<&mut Rng>) -> HeadCache {
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n - 1);
        let mut masks = Vec::with_capacity(n - 1);
        let mut a = x.to_vec();
        for (l, d) in self.layers.iter().enumerate() {
            let mut z = d.weight.matvec(&a);
            for (zi, bi) in z.iter_mut().zip(&d.bias.values) {
                *zi += bi;
            }
            inputs.push(a);
            if l + 1 == n {
                return HeadCache {
                    inputs,
                    pre,
                    masks,
                    logits: z,
                };
            }
            let mut h: Vec<f64> = z.iter().map(|&v| math::relu(v)).collect();
            let mask = match dropout_rng.as_deref_mut() {
                Some(rng) if self.spec.dropout > 0.0 => {
                    let m = dropout_mask(h.len(), self.spec.dropout, rng);
                    h.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                    Some(m)
                }
                _ => None,
            };
            pre.push(z);
            masks.push(mask);
            a = h;
        }
        unreachable!("head has an output layer")
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x, None).logits
    }

    pub fn posteriors(&self, x: &[f64]) -> [f64; NUM_LABELS] {
        super::sigmoid_all(&self.logits(x))
    }

    /// Accumulates parameter gradients for `dlogits` and returns the
    /// gradient with respect to the input when `want_input_grad` is set.
    pub fn backward(
        &mut self,
        cache: &HeadCache,
        dlogits: &[f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let n = self.layers.len();
        let mut delta = dlogits.to_vec();
        for l in (0..n).rev() {
            let input = &cache.inputs[l];
            let d = &mut self.layers[l];
            d.weight.add_outer_grad(&delta, input);
            d.bias.add_grad(&delta);
            if l == 0 && !want_input_grad {
                return None;
            }
            let mut dinput = vec![0.0; input.len()];
            d.weight.matvec_t_acc(&delta, &mut dinput);
            if l == 0 {
                return Some(dinput);
            }
            // through dropout then ReLU of layer l - 1
            if let Some(m) = &cache.masks[l - 1] {
                dinput.iter_mut().zip(m).for_each(|(g, k)| *g *= k);
            }
            for (g, &z) in dinput.iter_mut().zip(&cache.pre[l - 1]) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
            delta = dinput;
        }
        None
    }
}
