//! Corpus files: one JSON document per line.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use segtopic_core::corpus::{Document, Segment, TopicLabel};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{CliError, Result};
use crate::float;

/// Version of the corpus line schema, reported in command logs.
pub const CORPUS_FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    doc_id: String,
    #[serde(default = "yes")]
    annotated: bool,
    segments: Vec<SegmentIn>,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentIn {
    segment_id: String,
    tokens: Vec<String>,
    music_posterior: f64,
    #[serde(default)]
    labels: Vec<String>,
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    doc_id: &'a str,
    annotated: bool,
    segments: Vec<SegmentOut<'a>>,
}

#[derive(Serialize)]
struct SegmentOut<'a> {
    segment_id: &'a str,
    tokens: &'a [String],
    music_posterior: Box<RawValue>,
    labels: Vec<&'static str>,
}

fn convert(d: DocumentIn) -> segtopic_core::Result<Document> {
    let segments = d
        .segments
        .into_iter()
        .map(|s| {
            let labels = s
                .labels
                .iter()
                .map(|l| TopicLabel::from_name(l))
                .collect::<segtopic_core::Result<BTreeSet<_>>>()?;
            Ok(Segment {
                segment_id: s.segment_id,
                tokens: s.tokens,
                music_posterior: s.music_posterior,
                labels,
            })
        })
        .collect::<segtopic_core::Result<Vec<_>>>()?;
    let doc = Document {
        doc_id: d.doc_id,
        annotated: d.annotated,
        segments,
    };
    doc.validate()?;
    Ok(doc)
}

/// Parses corpus text; `origin` only labels error messages. Blank lines are
/// skipped.
pub fn parse_corpus(text: &str, origin: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: DocumentIn =
            serde_json::from_str(line).map_err(|e| CliError::parse(origin, lineno, e))?;
        let doc = convert(raw).map_err(|e| CliError::parse(origin, lineno, e))?;
        if !ids.insert(doc.doc_id.clone()) {
            return Err(CliError::parse(
                origin,
                lineno,
                segtopic_core::Error::DuplicateId {
                    what: "document",
                    id: doc.doc_id,
                },
            ));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_corpus(&text, path)
}

pub fn corpus_to_string(docs: &[Document]) -> String {
    let mut out = String::new();
    for d in docs {
        let rec = DocumentOut {
            doc_id: &d.doc_id,
            annotated: d.annotated,
            segments: d
                .segments
                .iter()
                .map(|s| SegmentOut {
                    segment_id: &s.segment_id,
                    tokens: &s.tokens,
                    music_posterior: float::raw(s.music_posterior),
                    labels: s.labels.iter().map(|l| l.name()).collect(),
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("corpus records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: &Path, docs: &[Document]) -> Result<()> {
    fs::write(path, corpus_to_string(docs)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use segtopic_core::corpus::{generate_corpus, CorpusSpec};

    fn p() -> &'static Path {
        Path::new("test.jsonl")
    }

    #[test]
    fn generated_corpus_round_trips() {
        let docs = generate_corpus(&CorpusSpec {
            num_documents: 5,
            ..Default::default()
        })
        .unwrap();
        let text = corpus_to_string(&docs);
        assert_eq!(parse_corpus(&text, p()).unwrap(), docs);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let good = r#"{"doc_id":"a","segments":[{"segment_id":"a0","tokens":["x"],"music_posterior":0.5,"labels":["Evacuation"]}]}"#;
        let cases = [
            (r#"{"doc_id":"b","segments":[{"segment_id":"b0","tokens":[],"music_posterior":0.5,"labels":["Nope"]}]}"#, "unknown label"),
            (r#"{"doc_id":"b","segments":[{"segment_id":"b0","tokens":[],"music_posterior":1.5,"labels":["Evacuation"]}]}"#, "music posterior"),
            (r#"{"doc_id":"b","segments":[{"segment_id":"b0","tokens":[],"music_posterior":0.5,"labels":["Evacuation","Out-of-domain"]}]}"#, "exclusive"),
            (r#"{"doc_id":"a","segments":[{"segment_id":"x","tokens":[],"music_posterior":0.5,"labels":["Shelter"]}]}"#, "duplicate document"),
            ("{not json", "key must be a string"),
        ];
        for (bad, needle) in cases {
            let text = format!("{good}\n\n{bad}\n");
            let err = parse_corpus(&text, p()).unwrap_err();
            let msg = err.to_string();
            assert!(msg.starts_with("test.jsonl:3:"), "{msg}");
            assert!(msg.contains(needle), "{msg}");
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn unannotated_documents_allow_empty_labels() {
        let line = r#"{"doc_id":"a","annotated":false,"segments":[{"segment_id":"a0","tokens":["x"],"music_posterior":0.5}]}"#;
        let docs = parse_corpus(line, p()).unwrap();
        assert!(!docs[0].annotated && docs[0].segments[0].labels.is_empty());
        let line = r#"{"doc_id":"a","segments":[{"segment_id":"a0","tokens":["x"],"music_posterior":0.5}]}"#;
        assert!(parse_corpus(line, p()).is_err());
    }

    fn arb_segment(i: usize) -> impl Strategy<Value = Segment> {
        (
            proptest::collection::vec("[a-z \"\\\\\u{e9}\u{4e2d}]{0,8}", 0..5),
            0.001f64..0.999,
            proptest::option::of(proptest::collection::btree_set(0usize..11, 1..3)),
        )
            .prop_map(move |(tokens, music, labels)| Segment {
                segment_id: format!("s{i}"),
                tokens,
                music_posterior: music,
                labels: match labels {
                    Some(ls) => ls.into_iter().map(|l| TopicLabel::new(l).unwrap()).collect(),
                    None => [TopicLabel::OUT_OF_DOMAIN].into_iter().collect(),
                },
            })
    }

    proptest! {
        #[test]
        fn arbitrary_corpora_round_trip(segs in proptest::collection::vec(arb_segment(0), 1..4), n in 1usize..3) {
            let docs: Vec<Document> = (0..n)
                .map(|d| Document {
                    doc_id: format!("d{d}"),
                    annotated: true,
                    segments: segs.iter().enumerate().map(|(i, s)| Segment { segment_id: format!("s{i}"), ..s.clone() }).collect(),
                })
                .collect();
            let text = corpus_to_string(&docs);
            prop_assert_eq!(parse_corpus(&text, p()).unwrap(), docs);
        }
    }
}
