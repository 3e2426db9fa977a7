use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{FeatureKind, FeatureVector};
use crate::math;
use crate::{Error, Result};

/// Dense term index with per-term segment frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
    terms: Vec<String>,
    pub document_frequency: Vec<usize>,
    pub num_training_segments: usize,
}

impl Vocabulary {
    /// Terms must be distinct; indices follow the given order.
    pub fn from_parts(
        terms: Vec<String>,
        document_frequency: Vec<usize>,
        num_training_segments: usize,
    ) -> Result<Self> {
        if terms.len() != document_frequency.len() {
            return Err(Error::DimensionMismatch {
                expected: terms.len(),
                found: document_frequency.len(),
            });
        }
        let mut index = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    what: "vocabulary term",
                    id: t.clone(),
                });
            }
        }
        Ok(Vocabulary {
            index,
            terms,
            document_frequency,
            num_training_segments,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfOptions {
    /// Tokens with fewer characters are dropped.
    pub min_token_length: usize,
    pub stopwords: Option<BTreeSet<String>>,
}

impl Default for TfIdfOptions {
    fn default() -> Self {
        TfIdfOptions {
            min_token_length: 4,
            stopwords: Some(super::english_stopwords()),
        }
    }
}

impl TfIdfOptions {
    pub fn unfiltered() -> Self {
        TfIdfOptions {
            min_token_length: 0,
            stopwords: None,
        }
    }

    fn keeps(&self, token: &str) -> bool {
        token.chars().count() >= self.min_token_length
            && self.stopwords.as_ref().is_none_or(|s| !s.contains(token))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    pub vocabulary: Vocabulary,
    pub idf: Vec<f64>,
}

/// Smoothed inverse segment frequency `ln((1 + N) / (1 + df)) + 1`.
pub fn smoothed_idf(num_segments: usize, df: usize) -> f64 {
    math::ln((1.0 + num_segments as f64) / (1.0 + df as f64)) + 1.0
}

/// Fits the vocabulary and idf weights; each token list is one segment.
pub fn fit_tfidf<S: AsRef<str>>(segments: &[&[S]], options: &TfIdfOptions) -> Result<TfIdfModel> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tokens in segments {
        let distinct: BTreeSet<&str> = tokens
            .iter()
            .map(AsRef::as_ref)
            .filter(|t| options.keeps(t))
            .collect();
        for t in distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let n = segments.len();
    let (terms, freqs): (Vec<String>, Vec<usize>) =
        df.into_iter().map(|(t, c)| (String::from(t), c)).unzip();
    let idf = freqs.iter().map(|&d| smoothed_idf(n, d)).collect();
    Ok(TfIdfModel {
        vocabulary: Vocabulary::from_parts(terms, freqs, n)?,
        idf,
    })
}

impl TfIdfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    /// Raw counts of in-vocabulary tokens times idf, L2-normalised. A segment
    /// without in-vocabulary tokens maps to the zero vector.
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> FeatureVector {
        let mut v = vec![0.0; self.dim()];
        for t in tokens {
            if let Some(i) = self.vocabulary.get(t.as_ref()) {
                v[i] += 1.0;
            }
        }
        for (x, w) in v.iter_mut().zip(&self.idf) {
            *x *= w;
        }
        let norm = crate::numcore::norm2(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        FeatureVector {
            values: v,
            kind: FeatureKind::TfIdf,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn hand_computed_idf() {
        let a = toks(&["storm", "storm", "aid"]);
        let b = toks(&["aid"]);
        let m = fit_tfidf(&[&a[..], &b[..]], &TfIdfOptions::unfiltered()).unwrap();
        let storm = m.vocabulary.get("storm").unwrap();
        let aid = m.vocabulary.get("aid").unwrap();
        assert_eq!(m.vocabulary.document_frequency[storm], 1);
        assert_eq!(m.vocabulary.document_frequency[aid], 2);
        assert_eq!(m.idf[aid], 1.0);
        assert!((m.idf[storm] - (libm::log(1.5) + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn short_tokens_dropped() {
        let a = toks(&["storm", "aid", "flood"]);
        let opts = TfIdfOptions {
            min_token_length: 4,
            stopwords: None,
        };
        let m = fit_tfidf(&[&a[..]], &opts).unwrap();
        assert_eq!(m.vocabulary.terms(), &["flood", "storm"]);
    }

    #[test]
    fn default_filters_remove_stopwords() {
        let a = toks(&["there", "shelter", "would", "water"]);
        let m = fit_tfidf(&[&a[..]], &TfIdfOptions::default()).unwrap();
        assert_eq!(m.vocabulary.terms(), &["shelter", "water"]);
    }

    #[test]
    fn unfiltered_keeps_every_term() {
        let a = toks(&["a", "bb", "a"]);
        let b = toks(&["ccc", "the"]);
        let m = fit_tfidf(&[&a[..], &b[..]], &TfIdfOptions::unfiltered()).unwrap();
        assert_eq!(m.vocabulary.len(), 4);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let a = toks(&["aid", "the"]);
        assert_eq!(
            fit_tfidf(&[&a[..]], &TfIdfOptions::default()),
            Err(Error::EmptyVocabulary)
        );
    }

    #[test]
    fn transform_cases() {
        let a = toks(&["storm"]);
        let m = fit_tfidf(&[&a[..]], &TfIdfOptions::unfiltered()).unwrap();
        assert_eq!(m.transform(&toks(&["storm"; 5])).values, vec![1.0]);
        assert_eq!(m.transform(&toks(&["unseen", "words"])).values, vec![0.0]);

        let b = toks(&["storm", "flood", "rescue", "flood"]);
        let m = fit_tfidf(&[&a[..], &b[..]], &TfIdfOptions::unfiltered()).unwrap();
        let v = m.transform(&toks(&["flood", "storm", "x"]));
        assert!((crate::numcore::norm2(&v.values) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bag_of_words_order_invariance(
            words in proptest::collection::vec(0usize..6, 1..20),
            seed in any::<u64>(),
        ) {
            let vocab = ["flood", "storm", "rescue", "water", "food", "fire"];
            let train: Vec<String> = vocab.iter().map(|s| String::from(*s)).collect();
            let m = fit_tfidf(&[&train[..3], &train[2..]], &TfIdfOptions::unfiltered()).unwrap();
            let tokens: Vec<String> = words.iter().map(|&i| String::from(vocab[i])).collect();
            let mut shuffled = tokens.clone();
            crate::numcore::Rng::new(seed).shuffle(&mut shuffled);
            let a = m.transform(&tokens);
            let b = m.transform(&shuffled);
            prop_assert_eq!(&a, &b);
            let norm = crate::numcore::norm2(&a.values);
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}
