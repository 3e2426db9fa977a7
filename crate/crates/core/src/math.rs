//! Thin wrappers over `libm` so the crate stays `no_std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// Sigmoid kept strictly inside (0, 1): saturated values stop at the
/// nearest representable neighbours of 0 and 1.
#[inline]
pub fn posterior(x: f64) -> f64 {
    sigmoid(x).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}
