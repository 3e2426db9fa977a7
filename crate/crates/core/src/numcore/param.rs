use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::Rng;
use crate::math;

/// A trainable tensor with its gradient buffer. Matrices are `[rows, cols]`
/// row-major and map `cols` inputs to `rows` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        ParamTensor {
            shape: shape.to_vec(),
            values: vec![0.0; len],
            grad: vec![0.0; len],
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), values.len());
        let grad = vec![0.0; values.len()];
        ParamTensor {
            shape: shape.to_vec(),
            values,
            grad,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    #[inline]
    pub fn cols(&self) -> usize {
        if self.shape.len() > 1 {
            self.shape[1]
        } else {
            1
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `W x` for a matrix tensor.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols());
        (0..self.rows()).map(|i| super::dot(self.row(i), x)).collect()
    }

    /// `out += W x`
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += super::dot(self.row(i), x);
        }
    }

    /// `out += Wᵀ dy`
    pub fn matvec_t_acc(&self, dy: &[f64], out: &mut [f64]) {
        for (i, &d) in dy.iter().enumerate() {
            if d != 0.0 {
                super::axpy(d, self.row(i), out);
            }
        }
    }

    /// `grad += dy xᵀ`
    pub fn add_outer_grad(&mut self, dy: &[f64], x: &[f64]) {
        let c = self.cols();
        for (i, &d) in dy.iter().enumerate() {
            if d != 0.0 {
                super::axpy(d, x, &mut self.grad[i * c..(i + 1) * c]);
            }
        }
    }

    /// `grad += dy` for vector tensors.
    pub fn add_grad(&mut self, dy: &[f64]) {
        super::axpy(1.0, dy, &mut self.grad);
    }
}

/// Models exposing their trainable tensors in a fixed order. The order is
/// part of the serialized model format and of optimizer state alignment.
pub trait Parametrized {
    fn named_params(&self) -> Vec<(String, &ParamTensor)>;
    fn params_mut(&mut self) -> Vec<&mut ParamTensor>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_parameters(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.len()).sum()
    }
}

/// Vectors (biases) start at zero; matrices draw from the Glorot uniform
/// range `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
pub fn init_params(shape: &[usize], rng: &mut Rng) -> ParamTensor {
    assert!(!shape.is_empty(), "shape must be nonempty");
    let mut t = ParamTensor::zeros(shape);
    if shape.len() >= 2 {
        let fan_out = shape[0];
        let fan_in: usize = shape[1..].iter().product();
        let a = math::sqrt(6.0 / (fan_in + fan_out) as f64);
        for v in t.values.iter_mut() {
            *v = rng.uniform_range(-a, a);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_init_is_zero() {
        let mut rng = Rng::new(0);
        let b = init_params(&[17], &mut rng);
        assert!(b.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_params(&[20, 30], &mut Rng::new(9));
        let b = init_params(&[20, 30], &mut Rng::new(9));
        assert_eq!(a, b);
    }

    #[test]
    fn glorot_bound_holds_on_large_matrix() {
        let t = init_params(&[512, 300], &mut Rng::new(3));
        let bound = libm::sqrt(6.0 / 812.0);
        let max = t.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= bound, "{max} > {bound}");
        // the range is actually used
        assert!(max > 0.99 * bound);
    }
}
