use alloc::vec::Vec;

use super::Rng;

/// Inverted-dropout multipliers: each entry is `0` with probability `rate`,
/// otherwise `1 / (1 - rate)`. Rate zero never touches the generator.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut Rng) -> Vec<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if rate == 0.0 {
        return alloc::vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.uniform() < rate { 0.0 } else { keep })
        .collect()
}

/// Applies inverted dropout when `training`, identity otherwise.
pub fn dropout(x: &[f64], rate: f64, rng: &mut Rng, training: bool) -> Vec<f64> {
    if !training || rate == 0.0 {
        return x.to_vec();
    }
    let mask = dropout_mask(x.len(), rate, rng);
    x.iter().zip(&mask).map(|(v, m)| v * m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rate_zero_and_inference_are_identity() {
        let x = vec![0.5, -1.0, 2.0];
        let mut rng = Rng::new(1);
        assert_eq!(dropout(&x, 0.0, &mut rng, true), x);
        assert_eq!(dropout(&x, 0.9, &mut rng, false), x);
    }

    #[test]
    fn half_rate_preserves_mean() {
        let ones = vec![1.0; 100_000];
        let out = dropout(&ones, 0.5, &mut Rng::new(2024), true);
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        assert!((mean - 1.0).abs() <= 0.02, "mean {mean}");
        assert!(out.iter().all(|&v| v == 0.0 || v == 2.0));
    }
}
