//! Corpora, BIO labels, vocabularies and embedding initialization.

mod corpus;
mod embedding;
mod tag;
mod vocab;

pub use corpus::{ceil_count, normalize_digits, Corpus, Sentence, Token};
pub use embedding::{init_rows, EmbeddingSource, EmbeddingTable, Pretrained, UNIFORM_RANGE};
pub use tag::{repair_bio, repair_bio_str, Tag};
pub use vocab::{build_vocab, Vocab, PAD, PAD_TOKEN, UNK, UNK_TOKEN};
