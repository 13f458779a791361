use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::ModelConfig;
use crate::textpipe::{
    batch_pseudo_paragraphs, encode_review, EncodedReview, LabeledDoc, ParallelParagraph, Vocabulary,
};

use super::train::derive_seed;

const STREAM_PARAGRAPHS: u64 = 7;

/// Encodes labelled documents onto the model's grid.
pub fn encode_docs(docs: &[LabeledDoc], vocab: &Vocabulary, config: &ModelConfig) -> Result<Vec<EncodedReview>> {
    docs.iter()
        .map(|d| encode_review(&d.sentences, d.label, vocab, config.max_sentences, config.max_words))
        .collect()
}

/// Pseudo paragraphs for a run, with group sizes drawn from a stream derived from `seed`.
pub fn build_paragraphs(
    source: &[Vec<String>],
    target: &[Vec<String>],
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    config: &ModelConfig,
    seed: u64,
) -> Result<Vec<ParallelParagraph>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_PARAGRAPHS, 0));
    batch_pseudo_paragraphs(
        source,
        target,
        source_vocab,
        target_vocab,
        config.max_sentences,
        config.max_words,
        &mut rng,
    )
}
