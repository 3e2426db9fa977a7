//! File formats, configuration and the `segtopic` command-line tool on top of
//! [`segtopic_core`]. See `FORMATS.md` for the on-disk layouts.

pub mod cli;
pub mod config;
pub mod container;
pub mod corpus_io;
pub mod error;
pub mod float;
pub mod models;
pub mod output;
pub mod report;

pub use error::{CliError, Result};
