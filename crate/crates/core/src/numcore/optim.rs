use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{dot, ParamTensor};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for an ordered list of tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut ParamTensor]) -> Result<()> {
        self.step_scaled(params, 1.0)
    }

    /// One update with the learning rate multiplied by `lr_scale`. Gradients
    /// are checked before anything is modified.
    pub fn step_scaled(&mut self, params: &mut [&mut ParamTensor], lr_scale: f64) -> Result<()> {
        for (idx, p) in params.iter().enumerate() {
            if let Some(pos) = p.grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of tensor #{idx} (shape {:?}) at entry {pos} is {}",
                    p.shape, p.grad[pos]
                )));
            }
        }
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second_moment = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        assert_eq!(self.first_moment.len(), params.len(), "optimizer/tensor list mismatch");

        self.step += 1;
        let AdamConfig {
            alpha,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(beta1, t as f64);
        let bc2 = 1.0 - libm::pow(beta2, t as f64);
        let lr = alpha * lr_scale;
        for ((p, m), v) in params
            .iter_mut()
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            for i in 0..p.values.len() {
                let g = p.grad[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.values[i] -= lr * m_hat / (math::sqrt(v_hat) + epsilon);
            }
            if !p.is_finite() {
                return Err(Error::NonFinite(format!(
                    "parameters of shape {:?} after Adam step {}",
                    p.shape, self.step
                )));
            }
        }
        Ok(())
    }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(params: &mut [&mut ParamTensor], max_norm: f64) -> f64 {
    let sq: f64 = params.iter().map(|p| dot(&p.grad, &p.grad)).sum();
    let norm = math::sqrt(sq);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}

/// Linear scorer `w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeights {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearWeights {
    pub fn zeros(dim: usize) -> Self {
        LinearWeights {
            w: vec![0.0; dim],
            b: 0.0,
        }
    }

    #[inline]
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }
}

/// One Pegasos step for the hinge loss with ℓ2 regularisation:
/// `η = 1/(λt)`, shrink by `1 - ηλ`, then add `η·y·x` when `y·(w·x + b) < 1`.
/// The bias is the weight of an implicit constant-one feature and is
/// regularised with the rest.
pub fn sgd_hinge_step(
    weights: &mut LinearWeights,
    x: &[f64],
    y: f64,
    lambda: f64,
    t: u64,
) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hinge regularisation lambda must be positive, got {lambda}"
        )));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("hinge step index starts at 1".into()));
    }
    if x.len() != weights.w.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.w.len(),
            found: x.len(),
        });
    }
    let eta = 1.0 / (lambda * t as f64);
    let margin = y * weights.margin(x);
    let shrink = 1.0 - eta * lambda;
    weights.w.iter_mut().for_each(|w| *w *= shrink);
    weights.b *= shrink;
    if margin < 1.0 {
        super::axpy(eta * y, x, &mut weights.w);
        weights.b += eta * y;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64, g: f64) -> ParamTensor {
        let mut p = ParamTensor::from_values(&[1], vec![v]);
        p.grad[0] = g;
        p
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = ParamTensor::from_values(&[3], vec![1.0, -2.0, 0.5]);
        let before = p.values.clone();
        let mut adam = AdamState::new(AdamConfig::default());
        for _ in 0..25 {
            adam.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.values, before);
        assert_eq!(adam.step, 25);
    }

    #[test]
    fn first_step_moves_by_alpha() {
        let mut p = ParamTensor::from_values(&[2], vec![0.0, 0.0]);
        p.grad = vec![3.0, -0.2];
        let mut adam = AdamState::new(AdamConfig::default());
        adam.step(&mut [&mut p]).unwrap();
        assert!((p.values[0] + 1e-3).abs() < 1e-10);
        assert!((p.values[1] - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn two_steps_match_hand_trace() {
        let (alpha, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);
        let g = 0.5;
        // hand trace
        let m1 = (1.0 - b1) * g;
        let v1 = (1.0 - b2) * g * g;
        let p1 = 1.0 - alpha * (m1 / (1.0 - b1)) / (libm::sqrt(v1 / (1.0 - b2)) + eps);
        let m2 = b1 * m1 + (1.0 - b1) * g;
        let v2 = b2 * v1 + (1.0 - b2) * g * g;
        let p2 = p1
            - alpha * (m2 / (1.0 - b1 * b1)) / (libm::sqrt(v2 / (1.0 - b2 * b2)) + eps);

        let mut p = scalar(1.0, g);
        let mut adam = AdamState::new(AdamConfig::default());
        adam.step(&mut [&mut p]).unwrap();
        assert!((p.values[0] - p1).abs() < 1e-12);
        adam.step(&mut [&mut p]).unwrap();
        assert!((p.values[0] - p2).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_aborts_without_update() {
        let mut p = scalar(1.0, f64::NAN);
        let mut adam = AdamState::new(AdamConfig::default());
        assert!(matches!(adam.step(&mut [&mut p]), Err(Error::NonFinite(_))));
        assert_eq!(p.values[0], 1.0);
        assert_eq!(adam.step, 0);
    }

    #[test]
    fn hinge_inactive_only_shrinks() {
        let mut w = LinearWeights { w: vec![2.0, 0.0], b: 0.0 };
        // margin = 1 * (2 * 1) = 2 > 1
        sgd_hinge_step(&mut w, &[1.0, 0.0], 1.0, 0.5, 4).unwrap();
        let shrink = 1.0 - (1.0 / (0.5 * 4.0)) * 0.5;
        assert_eq!(w.w, vec![2.0 * shrink, 0.0]);
        assert_eq!(w.b, 0.0);
    }

    #[test]
    fn hinge_first_step_at_unit_lambda() {
        let mut w = LinearWeights::zeros(3);
        sgd_hinge_step(&mut w, &[0.5, -1.0, 2.0], -1.0, 1.0, 1).unwrap();
        assert_eq!(w.w, vec![-0.5, 1.0, -2.0]);
        assert_eq!(w.b, -1.0);
    }

    #[test]
    fn hinge_rejects_bad_lambda() {
        let mut w = LinearWeights::zeros(1);
        assert!(sgd_hinge_step(&mut w, &[1.0], 1.0, 0.0, 1).is_err());
        assert!(sgd_hinge_step(&mut w, &[1.0], 1.0, -1.0, 1).is_err());
    }

    #[test]
    fn clipping_caps_norm() {
        let mut a = scalar(0.0, 3.0);
        let mut b = scalar(0.0, 4.0);
        let before = clip_global_norm(&mut [&mut a, &mut b], 1.0);
        assert_eq!(before, 5.0);
        assert!((a.grad[0] - 0.6).abs() < 1e-15 && (b.grad[0] - 0.8).abs() < 1e-15);
    }
}
