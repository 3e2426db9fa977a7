//! Per-segment feature vectors: tf-idf with L2 normalisation, LSA projection
//! and the music-posterior concatenation `x ⊕ δ`.

mod lsa;
mod stopwords;
pub mod svd;
mod tfidf;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

pub use lsa::{fit_lsa, fit_lsa_with, reconstruction_error, LsaModel, LsaOptions};
pub use stopwords::ENGLISH_STOPWORDS;
pub use tfidf::{fit_tfidf, smoothed_idf, TfIdfModel, TfIdfOptions, Vocabulary};

use crate::corpus::{Document, Segment};
use crate::numcore::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    TfIdf,
    TfIdfMusic,
    Lsa,
    LsaMusic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub fn english_stopwords() -> BTreeSet<String> {
    ENGLISH_STOPWORDS.iter().map(|s| String::from(*s)).collect()
}

/// Appends the music posterior as one extra coordinate.
pub fn append_music(x: FeatureVector, delta: f64) -> Result<FeatureVector> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "music posterior {delta} outside (0, 1)"
        )));
    }
    let kind = match x.kind {
        FeatureKind::TfIdf => FeatureKind::TfIdfMusic,
        FeatureKind::Lsa => FeatureKind::LsaMusic,
        k => {
            return Err(Error::InvalidParameter(alloc::format!(
                "{k:?} features already carry the music posterior"
            )))
        }
    };
    let mut values = x.values;
    values.push(delta);
    Ok(FeatureVector { values, kind })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureOptions {
    pub tfidf: TfIdfOptions,
    /// `None` keeps raw tf-idf features.
    pub lsa_dim: Option<usize>,
    pub lsa: LsaOptions,
    pub music: bool,
    pub seed: u64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            tfidf: TfIdfOptions::default(),
            lsa_dim: Some(300),
            lsa: LsaOptions::default(),
            music: true,
            seed: 0,
        }
    }
}

/// Fitted segment → vector transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePipeline {
    pub tfidf: TfIdfModel,
    pub lsa: Option<LsaModel>,
    pub music: bool,
}

impl FeaturePipeline {
    /// Fits tf-idf and (optionally) LSA on the training segments only.
    pub fn fit(training: &[Document], opts: &FeatureOptions) -> Result<Self> {
        let token_lists: Vec<&[String]> = training
            .iter()
            .flat_map(|d| d.segments.iter().map(|s| s.tokens.as_slice()))
            .collect();
        let tfidf = fit_tfidf(&token_lists, &opts.tfidf)?;
        let lsa = match opts.lsa_dim {
            None => None,
            Some(k) => {
                let rows: Vec<Vec<f64>> =
                    token_lists.iter().map(|t| tfidf.transform(t).values).collect();
                let matrix = Matrix::from_rows(&rows);
                Some(fit_lsa_with(&matrix, k, opts.seed, opts.lsa)?)
            }
        };
        Ok(FeaturePipeline {
            tfidf,
            lsa,
            music: opts.music,
        })
    }

    pub fn dim(&self) -> usize {
        self.lsa.as_ref().map_or(self.tfidf.dim(), LsaModel::dim) + usize::from(self.music)
    }

    pub fn kind(&self) -> FeatureKind {
        match (self.lsa.is_some(), self.music) {
            (false, false) => FeatureKind::TfIdf,
            (false, true) => FeatureKind::TfIdfMusic,
            (true, false) => FeatureKind::Lsa,
            (true, true) => FeatureKind::LsaMusic,
        }
    }

    pub fn transform_segment(&self, segment: &Segment) -> Result<FeatureVector> {
        let mut x = self.tfidf.transform(&segment.tokens);
        if let Some(lsa) = &self.lsa {
            x = lsa.transform(&x)?;
        }
        if self.music {
            x = append_music(x, segment.music_posterior)?;
        }
        Ok(x)
    }

    /// One row per segment, in document order.
    pub fn transform_document(&self, doc: &Document) -> Result<Vec<Vec<f64>>> {
        doc.segments
            .iter()
            .map(|s| self.transform_segment(s).map(|x| x.values))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusSpec};
    use alloc::vec;

    #[test]
    fn append_music_cases() {
        let x = FeatureVector {
            values: vec![0.6, 0.8],
            kind: FeatureKind::Lsa,
        };
        let y = append_music(x.clone(), 0.5).unwrap();
        assert_eq!(y.values, vec![0.6, 0.8, 0.5]);
        assert_eq!(y.kind, FeatureKind::LsaMusic);
        assert!(append_music(x.clone(), 1.0).is_err());
        assert!(append_music(x, 0.0).is_err());
    }

    #[test]
    fn pipeline_dimensions() {
        let docs = generate_corpus(&CorpusSpec {
            num_documents: 20,
            ..Default::default()
        })
        .unwrap();
        let opts = FeatureOptions {
            lsa_dim: Some(16),
            ..Default::default()
        };
        let p = FeaturePipeline::fit(&docs, &opts).unwrap();
        assert_eq!(p.dim(), 17);
        assert_eq!(p.kind(), FeatureKind::LsaMusic);
        let rows = p.transform_document(&docs[0]).unwrap();
        assert_eq!(rows.len(), docs[0].len());
        let last = *rows[0].last().unwrap();
        assert!(last > 0.0 && last < 1.0);

        let raw = FeaturePipeline::fit(
            &docs,
            &FeatureOptions {
                lsa_dim: None,
                music: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(raw.dim(), raw.tfidf.dim());
    }
}
