use alloc::format;
use alloc::vec::Vec;

use super::{Parametrized, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Coordinates sampled per tensor; `None` checks every coordinate.
    pub max_coords_per_tensor: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            max_coords_per_tensor: Some(24),
            seed: 0,
        }
    }
}

/// Compares analytic gradients against central differences.
///
/// `backward` must zero the gradients, fill them for the current parameters
/// and return the loss; `loss` evaluates the same loss without gradients.
/// Returns `max |g_a - g_n| / max(1, |g_a| + |g_n|)` over the checked
/// coordinates.
pub fn grad_check<M: Parametrized>(
    model: &mut M,
    mut backward: impl FnMut(&mut M) -> f64,
    mut loss: impl FnMut(&M) -> f64,
    opts: GradCheckOptions,
) -> Result<f64> {
    let base = backward(model);
    if !base.is_finite() {
        return Err(Error::NonFinite(format!("loss {base} at the check point")));
    }
    let analytic: Vec<Vec<f64>> = model.params_mut().iter().map(|p| p.grad.clone()).collect();
    let mut rng = Rng::new(opts.seed);
    let h = opts.step;
    let mut worst = 0.0f64;

    for (t, grads) in analytic.iter().enumerate() {
        let len = grads.len();
        let coords: Vec<usize> = match opts.max_coords_per_tensor {
            Some(m) if m < len => {
                let mut perm = rng.permutation(len);
                perm.truncate(m);
                perm
            }
            _ => (0..len).collect(),
        };
        for i in coords {
            let original = model.params_mut()[t].values[i];
            model.params_mut()[t].values[i] = original + h;
            let plus = loss(model);
            model.params_mut()[t].values[i] = original - h;
            let minus = loss(model);
            model.params_mut()[t].values[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss while perturbing tensor #{t} entry {i}"
                )));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let g = grads[i];
            let rel = (g - numeric).abs() / (g.abs() + numeric.abs()).max(1.0);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
