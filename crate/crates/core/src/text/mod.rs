//! Tokenization, vocabulary interning, corpus ingestion, token-class
//! lexicons and seeded partitioning.

mod corpus;
pub mod lexicon;
mod tokenize;
pub(crate) mod vocab;

pub use corpus::{
    load_parallel, parallel_from_lines, partition, partition_indices, read_lines, CorpusBuilder, ParallelCorpus,
    TokenizedCorpus,
};
pub use lexicon::{is_numeric, SubsetLexicon};
pub use tokenize::{tokenize, TokenizeMode};
pub use vocab::{Sentence, TokenId, Vocabulary, BOS_FORM, EOS_FORM, UNK_FORM};
