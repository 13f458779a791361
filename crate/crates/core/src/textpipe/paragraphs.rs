use rand::Rng;

use crate::error::{data_err, Result};

use super::encode::{encode_grid, Grid};
use super::vocab::Vocabulary;

pub const MIN_GROUP: usize = 15;
pub const MAX_GROUP: usize = 30;

/// Contiguous group of aligned sentence pairs, each side encoded on its own grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelParagraph {
    pub source: Grid,
    pub target: Grid,
    pub group_size: usize,
}

/// Groups aligned sentences into pseudo paragraphs of 15 to 30 pairs.
///
/// The last group may be shorter (but never empty). Within a group the
/// sentence alignment is discarded: each side is simply encoded as a grid.
#[allow(clippy::too_many_arguments)]
pub fn batch_pseudo_paragraphs<R: Rng + ?Sized>(
    source: &[Vec<String>],
    target: &[Vec<String>],
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    max_sentences: usize,
    max_words: usize,
    rng: &mut R,
) -> Result<Vec<ParallelParagraph>> {
    batch_with_sizes(
        source,
        target,
        source_vocab,
        target_vocab,
        max_sentences,
        max_words,
        || rng.gen_range(MIN_GROUP..=MAX_GROUP),
    )
}

/// Same as [`batch_pseudo_paragraphs`] with group sizes drawn from `next_size`.
pub fn batch_with_sizes(
    source: &[Vec<String>],
    target: &[Vec<String>],
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    max_sentences: usize,
    max_words: usize,
    mut next_size: impl FnMut() -> usize,
) -> Result<Vec<ParallelParagraph>> {
    if source.len() != target.len() {
        return Err(data_err!(
            "parallel streams are misaligned: {} source vs {} target sentences",
            source.len(),
            target.len()
        ));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start < source.len() {
        let k = next_size().max(1);
        let end = (start + k).min(source.len());
        out.push(ParallelParagraph {
            source: encode_grid(&source[start..end], source_vocab, max_sentences, max_words)?,
            target: encode_grid(&target[start..end], target_vocab, max_sentences, max_words)?,
            group_size: end - start,
        });
        start = end;
    }
    Ok(out)
}
