use alloc::string::String;
use alloc::vec::Vec;

use super::{score, system_output, ScoreReport};
use crate::corpus::{restrict, split_folds, split_segment_folds, Document, NUM_LABELS};
use crate::{Error, Result};

/// Unit that is dealt into folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FoldGranularity {
    #[default]
    Document,
    Segment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub num_test_documents: usize,
    pub num_test_segments: usize,
    /// `None` when the fold was skipped because its test part has no
    /// in-domain segment.
    pub report: Option<ScoreReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalReport {
    pub folds: Vec<FoldReport>,
    pub mean_relevance_ap: f64,
    pub mean_type_ap: f64,
}

impl CrossvalReport {
    pub fn skipped(&self) -> impl Iterator<Item = &FoldReport> {
        self.folds.iter().filter(|f| f.report.is_none())
    }
}

/// k-fold cross-validation. `train_predict(train, test)` must fit everything
/// (features included) on `train` only and return per-document 12-label
/// posteriors for `test`.
pub fn run_crossval<F>(
    corpus: &[Document],
    k: usize,
    seed: u64,
    granularity: FoldGranularity,
    mut train_predict: F,
) -> Result<CrossvalReport>
where
    F: FnMut(usize, &[Document], &[Document]) -> Result<Vec<Vec<[f64; NUM_LABELS]>>>,
{
    if let Some(d) = corpus.iter().find(|d| !d.annotated) {
        return Err(Error::InvalidParameter(alloc::format!(
            "cross-validation needs a fully labeled corpus; {} is unannotated",
            d.doc_id
        )));
    }
    let parts: Vec<(Vec<Document>, Vec<Document>)> = match granularity {
        FoldGranularity::Document => split_folds(corpus, k, seed)?
            .into_iter()
            .map(|ids| {
                (
                    restrict(corpus, |d, _| !ids.contains(d)),
                    restrict(corpus, |d, _| ids.contains(d)),
                )
            })
            .collect(),
        FoldGranularity::Segment => split_segment_folds(corpus, k, seed)?
            .into_iter()
            .map(|ids| {
                let has = |d: &str, s: &str| ids.contains(&(String::from(d), String::from(s)));
                (restrict(corpus, |d, s| !has(d, s)), restrict(corpus, has))
            })
            .collect(),
    };

    let mut folds = Vec::with_capacity(k);
    for (fold, (train, test)) in parts.into_iter().enumerate() {
        let num_test_segments = test.iter().map(|d| d.len()).sum();
        let in_domain = test
            .iter()
            .any(|d| d.segments.iter().any(|s| s.has_in_domain_label()));
        let report = if in_domain {
            let post = train_predict(fold, &train, &test)?;
            Some(score(&system_output(&test, &post), &test)?)
        } else {
            None
        };
        folds.push(FoldReport {
            fold,
            num_test_documents: test.len(),
            num_test_segments,
            report,
        });
    }

    let valid: Vec<&ScoreReport> = folds.iter().filter_map(|f| f.report.as_ref()).collect();
    if valid.is_empty() {
        return Err(Error::UndefinedAp);
    }
    let n = valid.len() as f64;
    Ok(CrossvalReport {
        mean_relevance_ap: valid.iter().map(|r| r.relevance_ap).sum::<f64>() / n,
        mean_type_ap: valid.iter().map(|r| r.type_ap).sum::<f64>() / n,
        folds,
    })
}
