//! Decimal float text with 17 significant digits, which round-trips every
//! finite `f64`.

use serde_json::value::RawValue;

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn raw(v: f64) -> Box<RawValue> {
    assert!(v.is_finite(), "non-finite value {v} cannot be serialized");
    RawValue::from_string(fmt(v)).expect("formatted float is valid JSON")
}

pub fn parse(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("invalid number {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123_456_789.123_456_79, 0.0, f64::MIN_POSITIVE] {
            assert_eq!(parse(&fmt(v)).unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(fmt(0.25), "2.5000000000000000e-1");
        assert!(parse("nan").is_err());
    }
}
