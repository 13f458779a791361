use crate::error::{config_err, data_err, Result};

use super::vocab::{Vocabulary, PAD};

/// Fixed `sentences x words` matrix of token ids, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    sentences: usize,
    words: usize,
    ids: Vec<u32>,
}

impl Grid {
    pub fn new(sentences: usize, words: usize, ids: Vec<u32>) -> Result<Self> {
        if sentences == 0 || words == 0 {
            return Err(config_err!("grid extents must be positive"));
        }
        if ids.len() != sentences * words {
            return Err(data_err!(
                "grid {sentences}x{words} needs {} ids, got {}",
                sentences * words,
                ids.len()
            ));
        }
        Ok(Self { sentences, words, ids })
    }

    pub fn padded(sentences: usize, words: usize) -> Self {
        Self {
            sentences,
            words,
            ids: vec![PAD; sentences * words],
        }
    }

    pub fn sentences(&self) -> usize {
        self.sentences
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn sentence(&self, s: usize) -> &[u32] {
        &self.ids[s * self.words..(s + 1) * self.words]
    }

    pub fn get(&self, s: usize, w: usize) -> u32 {
        self.ids[s * self.words + w]
    }

    pub fn max_id(&self) -> u32 {
        self.ids.iter().copied().max().unwrap_or(PAD)
    }
}

/// A labelled review normalised to a grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedReview {
    pub grid: Grid,
    pub label: u8,
    /// Sentence count before padding or truncation.
    pub orig_sentences: usize,
    /// Token count per original sentence.
    pub orig_words: Vec<usize>,
}

/// Encodes tokenised sentences into a `sentences x words` grid: prefixes are
/// kept, out-of-vocabulary tokens become UNK and the remainder is PAD.
pub fn encode_grid<S: AsRef<[String]>>(
    sentences: &[S],
    vocab: &Vocabulary,
    max_sentences: usize,
    max_words: usize,
) -> Result<Grid> {
    let mut grid = Grid::padded(max_sentences, max_words);
    if max_sentences == 0 || max_words == 0 {
        return Err(config_err!("grid extents must be positive"));
    }
    for (s, sentence) in sentences.iter().take(max_sentences).enumerate() {
        for (w, tok) in sentence.as_ref().iter().take(max_words).enumerate() {
            grid.ids[s * max_words + w] = vocab.encode(tok);
        }
    }
    Ok(grid)
}

pub fn encode_review<S: AsRef<[String]>>(
    sentences: &[S],
    label: u8,
    vocab: &Vocabulary,
    max_sentences: usize,
    max_words: usize,
) -> Result<EncodedReview> {
    if label > 1 {
        return Err(data_err!("label must be 0 or 1, got {label}"));
    }
    Ok(EncodedReview {
        grid: encode_grid(sentences, vocab, max_sentences, max_words)?,
        label,
        orig_sentences: sentences.len(),
        orig_words: sentences.iter().map(|s| s.as_ref().len()).collect(),
    })
}

/// Star rating to binary label: above 3 is positive, below 3 negative, and
/// exactly 3 is excluded (`None`).
pub fn binarize_rating(stars: f64) -> Result<Option<u8>> {
    if !(1.0..=5.0).contains(&stars) {
        return Err(data_err!("star rating {stars} outside [1, 5]"));
    }
    Ok(if stars > 3.0 {
        Some(1)
    } else if stars < 3.0 {
        Some(0)
    } else {
        None
    })
}
