use alloc::vec::Vec;

use crate::{Error, Result};

/// One point of a precision–recall curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
}

/// Step-interpolated area `Σ (R_n - R_{n-1}) P_n` over consecutive points.
pub fn ap_from_curve(curve: &[PrPoint]) -> f64 {
    let mut prev = 0.0;
    let mut ap = 0.0;
    for p in curve {
        ap += (p.recall - prev) * p.precision;
        prev = p.recall;
    }
    ap
}

/// Indices sorted by descending score; equal scores keep input order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

fn curve_for_order(order: &[usize], relevant: &[bool], total_relevant: usize) -> Vec<PrPoint> {
    let mut tp = 0usize;
    order
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            if relevant[i] {
                tp += 1;
            }
            PrPoint {
                precision: tp as f64 / (rank + 1) as f64,
                recall: tp as f64 / total_relevant as f64,
            }
        })
        .collect()
}

fn check(scores: &[f64], relevant: &[bool]) -> Result<usize> {
    if scores.len() != relevant.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: relevant.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::NonFinite(alloc::format!("score {s}")));
    }
    match relevant.iter().filter(|&&r| r).count() {
        0 => Err(Error::UndefinedAp),
        n => Ok(n),
    }
}

/// Per-rank precision–recall curve of the stable descending ranking.
pub fn ranked_curve(scores: &[f64], relevant: &[bool]) -> Result<Vec<PrPoint>> {
    let total = check(scores, relevant)?;
    Ok(curve_for_order(&ranking(scores), relevant, total))
}

/// Mean of `P@n` over the ranks `n` of relevant items in ties-broken-by-input-order
/// ranking by descending score. Equal to the step area of [`ranked_curve`]
/// up to rounding.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> Result<f64> {
    let total = check(scores, relevant)?;
    Ok(mean_precision_at_relevant(&ranking(scores), relevant, total))
}

fn mean_precision_at_relevant(order: &[usize], relevant: &[bool], total: usize) -> f64 {
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if relevant[i] {
            tp += 1;
            sum += tp as f64 / (rank + 1) as f64;
        }
    }
    sum / total as f64
}

/// `(pessimistic, optimistic)` AP: tied items ordered with irrelevant,
/// respectively relevant, items first.
pub fn average_precision_tie_bounds(scores: &[f64], relevant: &[bool]) -> Result<(f64, f64)> {
    let total = check(scores, relevant)?;
    let bound = |relevant_first: bool| {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| {
                    if relevant_first {
                        relevant[b].cmp(&relevant[a])
                    } else {
                        relevant[a].cmp(&relevant[b])
                    }
                })
        });
        mean_precision_at_relevant(&idx, relevant, total)
    };
    Ok((bound(false), bound(true)))
}

/// Curve obtained by sweeping a threshold over the distinct score values in
/// descending order; all items tied at a threshold enter together.
pub fn threshold_curve(scores: &[f64], relevant: &[bool]) -> Result<Vec<PrPoint>> {
    let total = check(scores, relevant)?;
    let order = ranking(scores);
    let mut curve = Vec::new();
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            seen += 1;
            if relevant[order[i]] {
                tp += 1;
            }
            i += 1;
        }
        curve.push(PrPoint {
            precision: tp as f64 / seen as f64,
            recall: tp as f64 / total as f64,
        });
    }
    Ok(curve)
}

pub fn threshold_ap(scores: &[f64], relevant: &[bool]) -> Result<f64> {
    threshold_curve(scores, relevant).map(|c| ap_from_curve(&c))
}
