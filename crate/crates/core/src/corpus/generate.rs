//! Seeded synthetic corpora with Markov topic continuity across segments.
//!
//! Every in-domain topic owns a word distribution drawn from a symmetric
//! Dirichlet with parameter `topic_word_concentration` (small values give
//! peaked, well separated topics). Out-of-domain segments draw tokens
//! uniformly from the whole vocabulary.
//!
//! Within a document a latent in-domain topic follows a Markov chain: it is
//! kept with probability `topic_stay_probability` and otherwise replaced by a
//! uniformly chosen different topic. Each segment independently becomes
//! out-of-domain with probability `ood_fraction`; the chain keeps running
//! underneath. An in-domain segment is corrupted with probability
//! `label_noise`, choosing a distractor topic uniformly among the others:
//!
//!  - *flip* (half of the corruptions): tokens come from the distractor while
//!    the gold label stays the latent topic, so only the surrounding
//!    segments reveal the truth;
//!  - *augment* (the other half): the distractor joins the gold label set
//!    and tokens are drawn from both topics with equal probability.
//!
//! Music posteriors are Gaussian around 0.25, shifted by
//! `music_posterior_ood_shift` for out-of-domain segments, and clamped into
//! `[0.005, 0.995]`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Gamma};

use super::{Document, Segment, TopicLabel, NUM_IN_DOMAIN, NUM_LABELS};
use crate::numcore::Rng;
use crate::{Error, Result};

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub const fn new(min: usize, max: usize) -> Self {
        CountRange { min, max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub num_documents: usize,
    pub segments_per_doc: CountRange,
    pub topic_stay_probability: f64,
    pub vocab_size: usize,
    pub tokens_per_segment: CountRange,
    pub topic_word_concentration: f64,
    pub label_noise: f64,
    pub ood_fraction: f64,
    pub music_posterior_ood_shift: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            num_documents: 100,
            segments_per_doc: CountRange::new(4, 12),
            topic_stay_probability: 0.8,
            vocab_size: 1000,
            tokens_per_segment: CountRange::new(10, 30),
            topic_word_concentration: 0.05,
            label_noise: 0.1,
            ood_fraction: 0.25,
            music_posterior_ood_shift: 0.3,
            seed: 0,
        }
    }
}

const MUSIC_BASE: f64 = 0.25;
const MUSIC_SD: f64 = 0.15;

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        for (name, r) in [
            ("segments_per_doc", self.segments_per_doc),
            ("tokens_per_segment", self.tokens_per_segment),
        ] {
            if r.min > r.max {
                return bad(format!("{name} range {}..={} is empty", r.min, r.max));
            }
        }
        if self.segments_per_doc.min == 0 {
            return bad("segments_per_doc must allow at least one segment".into());
        }
        for (name, p) in [
            ("topic_stay_probability", self.topic_stay_probability),
            ("label_noise", self.label_noise),
            ("ood_fraction", self.ood_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.vocab_size < NUM_LABELS {
            return bad(format!("vocab_size {} < {NUM_LABELS}", self.vocab_size));
        }
        if !(self.topic_word_concentration > 0.0) || !self.topic_word_concentration.is_finite() {
            return bad("topic_word_concentration must be positive".into());
        }
        if !self.music_posterior_ood_shift.is_finite() {
            return bad("music_posterior_ood_shift must be finite".into());
        }
        Ok(())
    }
}

fn word(i: usize) -> String {
    format!("w{i:05}")
}

fn topic_word_distributions(spec: &CorpusSpec, rng: &mut Rng) -> Vec<WeightedIndex<f64>> {
    let gamma = Gamma::new(spec.topic_word_concentration, 1.0).expect("validated concentration");
    (0..NUM_IN_DOMAIN)
        .map(|_| {
            let mut w: Vec<f64> = (0..spec.vocab_size).map(|_| gamma.sample(rng)).collect();
            if w.iter().all(|&v| v <= 0.0) {
                w[rng.below(spec.vocab_size)] = 1.0;
            }
            // tiny floor keeps every weight strictly positive after underflow
            w.iter_mut().for_each(|v| *v += 1e-300);
            WeightedIndex::new(&w).expect("positive weights")
        })
        .collect()
}

fn other_topic(rng: &mut Rng, current: usize) -> usize {
    let k = rng.below(NUM_IN_DOMAIN - 1);
    if k >= current {
        k + 1
    } else {
        k
    }
}

fn music(rng: &mut Rng, ood: bool, shift: f64) -> f64 {
    let mean = MUSIC_BASE + if ood { shift } else { 0.0 };
    (mean + MUSIC_SD * rng.normal()).clamp(0.005, 0.995)
}

/// Pure function of `spec`.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<Document>> {
    spec.validate()?;
    let base = Rng::new(spec.seed);
    let topics = topic_word_distributions(spec, &mut base.derive(0));
    let mut rng = base.derive(1);

    let mut docs = Vec::with_capacity(spec.num_documents);
    for d in 0..spec.num_documents {
        let doc_id = format!("doc{d:05}");
        let n = rng.inclusive(spec.segments_per_doc.min, spec.segments_per_doc.max);
        let mut latent = rng.below(NUM_IN_DOMAIN);
        let mut segments = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 && !rng.bernoulli(spec.topic_stay_probability) {
                latent = other_topic(&mut rng, latent);
            }
            let ood = rng.bernoulli(spec.ood_fraction);
            let ntok = rng.inclusive(spec.tokens_per_segment.min, spec.tokens_per_segment.max);
            let mut labels = BTreeSet::new();
            let tokens: Vec<String> = if ood {
                labels.insert(TopicLabel::OUT_OF_DOMAIN);
                (0..ntok).map(|_| word(rng.below(spec.vocab_size))).collect()
            } else {
                labels.insert(TopicLabel::new(latent).expect("in-domain id"));
                let (primary, secondary) = if rng.bernoulli(spec.label_noise) {
                    let distractor = other_topic(&mut rng, latent);
                    if rng.bernoulli(0.5) {
                        (distractor, None)
                    } else {
                        labels.insert(TopicLabel::new(distractor).expect("in-domain id"));
                        (latent, Some(distractor))
                    }
                } else {
                    (latent, None)
                };
                (0..ntok)
                    .map(|_| {
                        let t = match secondary {
                            Some(s) if rng.bernoulli(0.5) => s,
                            _ => primary,
                        };
                        word(topics[t].sample(&mut rng))
                    })
                    .collect()
            };
            segments.push(Segment {
                segment_id: format!("{doc_id}_s{i:03}"),
                tokens,
                music_posterior: music(&mut rng, ood, spec.music_posterior_ood_shift),
                labels,
            });
        }
        docs.push(Document {
            doc_id,
            annotated: true,
            segments,
        });
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub documents: usize,
    pub segments: usize,
    /// Segment count per label id.
    pub label_histogram: [usize; NUM_LABELS],
    pub ood_fraction: f64,
}

pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let mut hist = [0usize; NUM_LABELS];
    let mut segments = 0;
    for seg in docs.iter().flat_map(|d| &d.segments) {
        segments += 1;
        for l in &seg.labels {
            hist[l.id()] += 1;
        }
    }
    CorpusStats {
        documents: docs.len(),
        segments,
        label_histogram: hist,
        ood_fraction: if segments == 0 {
            0.0
        } else {
            hist[TopicLabel::OUT_OF_DOMAIN.id()] as f64 / segments as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let spec = CorpusSpec {
            seed: 7,
            num_documents: 20,
            ..Default::default()
        };
        assert_eq!(generate_corpus(&spec).unwrap(), generate_corpus(&spec).unwrap());
        let other = CorpusSpec { seed: 8, ..spec };
        assert_ne!(generate_corpus(&spec).unwrap(), generate_corpus(&other).unwrap());
    }

    #[test]
    fn degenerate_chain_is_single_topic() {
        let spec = CorpusSpec {
            topic_stay_probability: 1.0,
            ood_fraction: 0.0,
            label_noise: 0.0,
            num_documents: 30,
            seed: 3,
            ..Default::default()
        };
        for doc in generate_corpus(&spec).unwrap() {
            let first = &doc.segments[0].labels;
            assert_eq!(first.len(), 1);
            assert!(doc.segments.iter().all(|s| &s.labels == first));
        }
    }

    #[test]
    fn ood_fraction_matches_spec() {
        let spec = CorpusSpec {
            num_documents: 200,
            ood_fraction: 0.3,
            seed: 1,
            ..Default::default()
        };
        let stats = corpus_stats(&generate_corpus(&spec).unwrap());
        assert!((stats.ood_fraction - 0.3).abs() <= 0.05, "{}", stats.ood_fraction);
    }

    #[test]
    fn generated_segments_satisfy_invariants() {
        let spec = CorpusSpec {
            num_documents: 50,
            label_noise: 0.5,
            seed: 11,
            ..Default::default()
        };
        let docs = generate_corpus(&spec).unwrap();
        super::super::validate_corpus(&docs).unwrap();
        for s in docs.iter().flat_map(|d| &d.segments) {
            assert!(!s.labels.is_empty());
            let n = s.tokens.len();
            assert!((10..=30).contains(&n));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = [
            CorpusSpec { vocab_size: 11, ..Default::default() },
            CorpusSpec { ood_fraction: 1.5, ..Default::default() },
            CorpusSpec { segments_per_doc: CountRange::new(5, 4), ..Default::default() },
            CorpusSpec { topic_word_concentration: 0.0, ..Default::default() },
        ];
        for spec in bad {
            assert!(matches!(generate_corpus(&spec), Err(Error::InvalidSpec(_))));
        }
    }
}
