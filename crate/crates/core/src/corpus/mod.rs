//! Documents, segments and the fixed topic-label inventory, plus a seeded
//! synthetic corpus generator and fold splitting.

mod folds;
mod generate;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use folds::{restrict, split_folds, split_segment_folds};
pub use generate::{corpus_stats, generate_corpus, CorpusSpec, CorpusStats, CountRange};

use crate::{Error, Result};

/// Number of topic labels, out-of-domain included.
pub const NUM_LABELS: usize = 12;
/// Number of in-domain situation types.
pub const NUM_IN_DOMAIN: usize = 11;

const LABEL_NAMES: [&str; NUM_LABELS] = [
    "Evacuation",
    "Food Supply",
    "Urgent Rescue",
    "Utilities, Energy, or Sanitation",
    "Infrastructure",
    "Medical Assistance",
    "Shelter",
    "Water Supply",
    "Civil Unrest or Wide-spread Crime",
    "Elections and Politics",
    "Terrorism or other Extreme Violence",
    "Out-of-domain",
];

/// One of the 12 topic labels. Ids `0..=10` are the in-domain situation types
/// in their canonical order; id 11 is out-of-domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopicLabel(u8);

impl TopicLabel {
    pub const OUT_OF_DOMAIN: TopicLabel = TopicLabel(11);

    pub fn new(id: usize) -> Option<TopicLabel> {
        (id < NUM_LABELS).then_some(TopicLabel(id as u8))
    }

    pub fn from_name(name: &str) -> Result<TopicLabel> {
        LABEL_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| TopicLabel(i as u8))
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    #[inline]
    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        LABEL_NAMES[self.id()]
    }

    #[inline]
    pub fn is_in_domain(self) -> bool {
        self != Self::OUT_OF_DOMAIN
    }

    pub fn all() -> impl Iterator<Item = TopicLabel> {
        (0..NUM_LABELS as u8).map(TopicLabel)
    }

    pub fn in_domain() -> impl Iterator<Item = TopicLabel> {
        (0..NUM_IN_DOMAIN as u8).map(TopicLabel)
    }
}

impl core::fmt::Display for TopicLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub segment_id: String,
    pub tokens: Vec<String>,
    /// Posterior that a substantial portion of the segment is music.
    pub music_posterior: f64,
    /// Empty for unannotated segments.
    pub labels: BTreeSet<TopicLabel>,
}

impl Segment {
    pub fn is_out_of_domain(&self) -> bool {
        self.labels.contains(&TopicLabel::OUT_OF_DOMAIN)
    }

    pub fn has_in_domain_label(&self) -> bool {
        self.labels.iter().any(|l| l.is_in_domain())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.music_posterior > 0.0 && self.music_posterior < 1.0) {
            return Err(Error::MusicPosterior {
                segment_id: self.segment_id.clone(),
                value: self.music_posterior,
            });
        }
        if self.is_out_of_domain() && self.labels.len() > 1 {
            return Err(Error::ExclusiveLabel {
                segment_id: self.segment_id.clone(),
            });
        }
        Ok(())
    }
}

/// An ordered sequence of segments. Segment order is the order of ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    /// Whether gold labels are present; annotated documents have a nonempty
    /// label set on every segment.
    pub annotated: bool,
    pub segments: Vec<Segment>,
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::EmptyDocument(self.doc_id.clone()));
        }
        let mut ids = BTreeSet::new();
        for seg in &self.segments {
            seg.validate()?;
            if self.annotated && seg.labels.is_empty() {
                return Err(Error::UnlabeledSegment(seg.segment_id.clone()));
            }
            if !ids.insert(seg.segment_id.as_str()) {
                return Err(Error::DuplicateId {
                    what: "segment",
                    id: seg.segment_id.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Checks every document and the uniqueness of document ids.
pub fn validate_corpus(docs: &[Document]) -> Result<()> {
    let mut ids = BTreeSet::new();
    for doc in docs {
        doc.validate()?;
        if !ids.insert(doc.doc_id.as_str()) {
            return Err(Error::DuplicateId {
                what: "document",
                id: doc.doc_id.clone(),
            });
        }
    }
    Ok(())
}

pub fn num_segments(docs: &[Document]) -> usize {
    docs.iter().map(Document::len).sum()
}
