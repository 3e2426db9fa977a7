//! Two-layer average-precision scoring and the cross-validation runner.
//!
//! The Relevance layer ranks segments by their largest in-domain posterior
//! against the truth "has at least one in-domain label". The Type layer pools
//! every (segment, in-domain topic) pair and sweeps a threshold over the
//! distinct posterior values. Out-of-domain is never scored as a topic.

mod ap;
mod crossval;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

pub use ap::{
    ap_from_curve, average_precision, average_precision_tie_bounds, ranked_curve,
    threshold_ap, threshold_curve, PrPoint,
};
pub use crossval::{run_crossval, CrossvalReport, FoldGranularity, FoldReport};

use crate::classifiers::LabelVector;
use crate::corpus::{Document, NUM_IN_DOMAIN, NUM_LABELS};
use crate::{Error, Result};

/// In-domain posteriors of one segment, in label-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPosteriors {
    pub doc_id: String,
    pub segment_id: String,
    pub posteriors: [f64; NUM_IN_DOMAIN],
}

impl SegmentPosteriors {
    /// Drops the out-of-domain entry of a full 12-label posterior vector.
    pub fn from_full(doc_id: &str, segment_id: &str, full: &[f64; NUM_LABELS]) -> Self {
        let mut posteriors = [0.0; NUM_IN_DOMAIN];
        posteriors.copy_from_slice(&full[..NUM_IN_DOMAIN]);
        SegmentPosteriors {
            doc_id: doc_id.into(),
            segment_id: segment_id.into(),
            posteriors,
        }
    }

    pub fn in_domain_score(&self) -> f64 {
        self.posteriors.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A system's per-segment output for a whole corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SystemOutput {
    pub records: Vec<SegmentPosteriors>,
}

impl SystemOutput {
    fn index(&self) -> Result<BTreeMap<(&str, &str), &SegmentPosteriors>> {
        let mut map = BTreeMap::new();
        for r in &self.records {
            if let Some(p) = r.posteriors.iter().find(|p| !p.is_finite()) {
                return Err(Error::NonFinite(alloc::format!(
                    "posterior {p} for {}/{}",
                    r.doc_id, r.segment_id
                )));
            }
            if map.insert((r.doc_id.as_str(), r.segment_id.as_str()), r).is_some() {
                return Err(Error::DuplicateId {
                    what: "system-output segment",
                    id: alloc::format!("{}/{}", r.doc_id, r.segment_id),
                });
            }
        }
        Ok(map)
    }

    /// Records aligned with the reference corpus order, with the gold label
    /// vector of each segment. Every reference segment must be present and
    /// every record must resolve.
    fn align<'a>(
        &'a self,
        reference: &[Document],
    ) -> Result<(Vec<&'a SegmentPosteriors>, Vec<LabelVector>)> {
        let mut index = self.index()?;
        let mut recs = Vec::new();
        let mut gold = Vec::new();
        for doc in reference {
            for seg in &doc.segments {
                let r = index
                    .remove(&(doc.doc_id.as_str(), seg.segment_id.as_str()))
                    .ok_or_else(|| Error::MissingSegment {
                        doc_id: doc.doc_id.clone(),
                        segment_id: seg.segment_id.clone(),
                    })?;
                recs.push(r);
                gold.push(LabelVector::from_labels(&seg.labels)?);
            }
        }
        if let Some(((d, s), _)) = index.into_iter().next() {
            return Err(Error::UnknownSegment {
                doc_id: d.into(),
                segment_id: s.into(),
            });
        }
        Ok((recs, gold))
    }
}

/// Both layer APs with their precision–recall curves. The step area of each
/// curve reproduces the corresponding AP (exactly for Type, to rounding for
/// Relevance).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub relevance_ap: f64,
    pub type_ap: f64,
    /// `(pessimistic, optimistic)` Relevance AP under score ties.
    pub relevance_tie_bounds: (f64, f64),
    pub relevance_curve: Vec<PrPoint>,
    pub type_curve: Vec<PrPoint>,
}

fn relevance_inputs(recs: &[&SegmentPosteriors], gold: &[LabelVector]) -> (Vec<f64>, Vec<bool>) {
    (
        recs.iter().map(|r| r.in_domain_score()).collect(),
        gold.iter().map(|g| g.has_in_domain()).collect(),
    )
}

fn type_inputs<'a>(
    posteriors: impl Iterator<Item = &'a [f64]>,
    gold: &[LabelVector],
) -> (Vec<f64>, Vec<bool>) {
    let mut scores = Vec::new();
    let mut rel = Vec::new();
    for (p, g) in posteriors.zip(gold) {
        for k in 0..NUM_IN_DOMAIN {
            scores.push(p[k]);
            rel.push(g.get(k));
        }
    }
    (scores, rel)
}

pub fn score_relevance(output: &SystemOutput, reference: &[Document]) -> Result<f64> {
    let (recs, gold) = output.align(reference)?;
    let (s, r) = relevance_inputs(&recs, &gold);
    average_precision(&s, &r)
}

pub fn score_type(output: &SystemOutput, reference: &[Document]) -> Result<f64> {
    let (recs, gold) = output.align(reference)?;
    let (s, r) = type_inputs(recs.iter().map(|r| &r.posteriors[..]), &gold);
    threshold_ap(&s, &r)
}

pub fn score(output: &SystemOutput, reference: &[Document]) -> Result<ScoreReport> {
    let (recs, gold) = output.align(reference)?;
    let (s, r) = relevance_inputs(&recs, &gold);
    let relevance_curve = ranked_curve(&s, &r)?;
    let relevance_tie_bounds = average_precision_tie_bounds(&s, &r)?;
    let (ts, tr) = type_inputs(recs.iter().map(|r| &r.posteriors[..]), &gold);
    let type_curve = threshold_curve(&ts, &tr)?;
    Ok(ScoreReport {
        relevance_ap: average_precision(&s, &r)?,
        type_ap: ap_from_curve(&type_curve),
        relevance_tie_bounds,
        relevance_curve,
        type_curve,
    })
}

/// Type AP of full 12-label posteriors against label vectors, used for
/// validation-based model selection.
pub fn type_ap_from_labels(posteriors: &[[f64; NUM_LABELS]], labels: &[LabelVector]) -> Result<f64> {
    if posteriors.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: posteriors.len(),
        });
    }
    let (s, r) = type_inputs(posteriors.iter().map(|p| &p[..]), labels);
    threshold_ap(&s, &r)
}

/// Builds a system output from per-document 12-label posteriors.
pub fn system_output(docs: &[Document], posteriors: &[Vec<[f64; NUM_LABELS]>]) -> SystemOutput {
    let records = docs
        .iter()
        .zip(posteriors)
        .flat_map(|(d, ps)| {
            d.segments
                .iter()
                .zip(ps)
                .map(|(s, p)| SegmentPosteriors::from_full(&d.doc_id, &s.segment_id, p))
        })
        .collect();
    SystemOutput { records }
}
