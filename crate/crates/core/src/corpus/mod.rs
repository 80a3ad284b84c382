//! Corpus ingestion and sample preparation for continuation experiments.

mod document;
mod prepare;
mod sample;

pub use document::{load_corpus, write_corpus, Document, LoadedCorpus};
pub use prepare::{
    prefix_of, prepare, read_pairs, truncate, write_pairs, PrefixRule, PrepConfig, PreparedPair,
};
pub use sample::sample_corpus;
