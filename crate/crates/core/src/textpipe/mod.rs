//! Tokenisation, vocabularies, grid encoding and pseudo-paragraph batching.

mod encode;
pub mod io;
mod paragraphs;
mod tokenize;
mod vocab;

pub use encode::{binarize_rating, encode_grid, encode_review, EncodedReview, Grid};
pub use io::{CorpusStats, LabeledCorpus, LabeledDoc, ReviewRecord};
pub use paragraphs::{batch_pseudo_paragraphs, batch_with_sizes, ParallelParagraph, MAX_GROUP, MIN_GROUP};
pub use tokenize::tokenize;
pub use vocab::{build_vocab, Vocabulary, PAD, PAD_TOKEN, RESERVED, UNK, UNK_TOKEN};
