use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::Document;
use crate::numcore::Rng;
use crate::{Error, Result};

/// Partitions document ids into `k` folds whose sizes differ by at most one.
pub fn split_folds(corpus: &[Document], k: usize, seed: u64) -> Result<Vec<BTreeSet<String>>> {
    let ids: Vec<&str> = corpus.iter().map(|d| d.doc_id.as_str()).collect();
    deal(&ids, k, seed).map(|folds| {
        folds
            .into_iter()
            .map(|f| f.into_iter().map(String::from).collect())
            .collect()
    })
}

/// Segment-granularity variant: partitions `(doc_id, segment_id)` pairs.
pub fn split_segment_folds(
    corpus: &[Document],
    k: usize,
    seed: u64,
) -> Result<Vec<BTreeSet<(String, String)>>> {
    let ids: Vec<(&str, &str)> = corpus
        .iter()
        .flat_map(|d| d.segments.iter().map(move |s| (d.doc_id.as_str(), s.segment_id.as_str())))
        .collect();
    deal(&ids, k, seed).map(|folds| {
        folds
            .into_iter()
            .map(|f| f.into_iter().map(|(d, s)| (d.into(), s.into())).collect())
            .collect()
    })
}

fn deal<T: Copy + Ord>(items: &[T], k: usize, seed: u64) -> Result<Vec<BTreeSet<T>>> {
    if k < 2 {
        return Err(Error::InvalidParameter("cross-validation needs k >= 2".into()));
    }
    if items.len() < k {
        return Err(Error::TooFewDocuments {
            needed: k,
            found: items.len(),
        });
    }
    let order = Rng::new(seed).permutation(items.len());
    let mut folds: Vec<BTreeSet<T>> = (0..k).map(|_| BTreeSet::new()).collect();
    for (pos, &idx) in order.iter().enumerate() {
        folds[pos % k].insert(items[idx]);
    }
    Ok(folds)
}

/// Copies the corpus keeping only segments for which `keep` holds; documents
/// left without segments are dropped. Segment order is preserved.
pub fn restrict(corpus: &[Document], mut keep: impl FnMut(&str, &str) -> bool) -> Vec<Document> {
    corpus
        .iter()
        .filter_map(|d| {
            let segments: Vec<_> = d
                .segments
                .iter()
                .filter(|s| keep(&d.doc_id, &s.segment_id))
                .cloned()
                .collect();
            (!segments.is_empty()).then(|| Document {
                doc_id: d.doc_id.clone(),
                annotated: d.annotated,
                segments,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusSpec};
    use proptest::prelude::*;

    fn corpus(n: usize) -> Vec<Document> {
        generate_corpus(&CorpusSpec {
            num_documents: n,
            segments_per_doc: crate::corpus::CountRange::new(1, 3),
            tokens_per_segment: crate::corpus::CountRange::new(1, 2),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn ten_documents_ten_singletons() {
        let folds = split_folds(&corpus(10), 10, 0).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn pigeonhole_sizes() {
        let folds = split_folds(&corpus(23), 10, 5).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [2, 2, 2, 2, 2, 2, 2, 3, 3, 3]);
    }

    #[test]
    fn too_many_folds() {
        assert!(matches!(
            split_folds(&corpus(3), 4, 0),
            Err(Error::TooFewDocuments { needed: 4, found: 3 })
        ));
        assert!(split_folds(&corpus(3), 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_ids(n in 2usize..40, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let c = corpus(n);
            let folds = split_folds(&c, k, seed).unwrap();
            prop_assert_eq!(&folds, &split_folds(&c, k, seed).unwrap());
            let mut union = BTreeSet::new();
            for f in &folds {
                for id in f {
                    prop_assert!(union.insert(id.clone()), "overlap on {}", id);
                }
            }
            let all: BTreeSet<String> = c.iter().map(|d| d.doc_id.clone()).collect();
            prop_assert_eq!(union, all);
            let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn segment_folds_partition_segments() {
        let c = corpus(12);
        let folds = split_segment_folds(&c, 3, 9).unwrap();
        let total: usize = folds.iter().map(|f| f.len()).sum();
        assert_eq!(total, crate::corpus::num_segments(&c));
        let kept = restrict(&c, |d, s| folds[0].contains(&(d.into(), s.into())));
        assert_eq!(crate::corpus::num_segments(&kept), folds[0].len());
    }
}
