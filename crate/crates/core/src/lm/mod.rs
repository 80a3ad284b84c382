//! Next-token model contract, the add-α n-gram backbone, and per-token
//! document scoring.

mod distribution;
mod ngram;
mod records;
mod vocab;

pub use distribution::{
    score_document, score_span, DocumentScore, LanguageModel, NextTokenDistribution, TokenRecord,
};
pub use ngram::{train_ngram, NgramConfig, NgramModel, MODEL_FORMAT, MODEL_VERSION};
pub use records::{write_records, RecordReader, RECORDS_FORMAT, RECORDS_VERSION};
pub use vocab::{tokenize, Vocabulary, UNK_TOKEN};

/// Index of a token in a [`Vocabulary`].
pub type TokenId = u32;

/// Context-only marker used to pad prefixes shorter than the model order.
/// Never part of a vocabulary and never predicted.
pub const START_MARKER: TokenId = TokenId::MAX;
