//! Numeric core for multi-label topic identification over segmented documents.
//!
//! Every document is an ordered sequence of segments; every segment carries a
//! bag of tokens, a music posterior and a set of topic labels drawn from a
//! fixed 12-label inventory (11 in-domain situation types plus
//! out-of-domain). The crate provides
//!
//!  - the corpus data model, a seeded synthetic corpus generator and
//!    document-level fold splitting ([`corpus`]),
//!  - tf-idf, latent semantic analysis and music-feature concatenation
//!    ([`features`]),
//!  - a small dense numeric substrate with Adam, Pegasos-style hinge SGD,
//!    dropout and a finite-difference gradient checker ([`numcore`]),
//!  - non-contextual classifiers: binary-relevance linear SVMs and a
//!    feedforward network trained on binary cross-entropy ([`classifiers`]),
//!  - contextual classifiers: a bidirectional GRU encoder and an additive
//!    neighbour-attention combiner with optional position gating
//!    ([`context`]),
//!  - Relevance/Type average-precision scoring and a cross-validation runner
//!    ([`eval`]),
//!  - miniature models for gradient checking ([`diagnostics`]),
//!  - the end-to-end feature + model pipeline used by all of the above
//!    ([`pipeline`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! files and the command-line tool live in the `segtopic` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classifiers;
pub mod context;
pub mod corpus;
pub mod diagnostics;
mod error;
pub mod eval;
pub mod features;
pub(crate) mod math;
pub mod numcore;
pub mod pipeline;

pub use error::{Error, ErrorKind, Result};
