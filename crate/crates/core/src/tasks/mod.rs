//! Vocabularies, task builders, corpora and evaluation metrics.

pub mod bleu;
pub mod corpus;
pub mod metrics;
pub mod parse;
pub mod synthetic;
pub mod vocab;
pub mod word_order;

pub use bleu::{corpus_bleu, sentence_bleu_smoothed};
pub use metrics::uas_las;
pub use parse::{decode_failure_fallback, decode_parse, encode_parse, ParseExample};
pub use vocab::Vocab;
pub use word_order::make_word_ordering_example;
