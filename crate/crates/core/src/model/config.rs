use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Layer sizes and input grid extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Word embedding width `d`, shared by every language table.
    pub embed_dim: usize,
    /// Sentence-level GRU state size.
    pub sentence_hidden: usize,
    /// Review-level GRU state size; the task representation width.
    pub review_hidden: usize,
    pub max_sentences: usize,
    pub max_words: usize,
    /// Output neurons: 1 selects the sigmoid head, 2 or more a normalised head.
    pub outputs: usize,
    /// Dropout on sentence vectors and on the task representation.
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            sentence_hidden: 256,
            review_hidden: 256,
            max_sentences: 30,
            max_words: 20,
            outputs: 1,
            dropout: 0.5,
        }
    }
}

impl ModelConfig {
    /// Small configuration for CPU-minute runs on the synthetic benchmark.
    pub fn desk() -> Self {
        Self {
            embed_dim: 16,
            sentence_hidden: 24,
            review_hidden: 24,
            max_sentences: 30,
            max_words: 6,
            outputs: 1,
            dropout: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed_dim", self.embed_dim),
            ("sentence_hidden", self.sentence_hidden),
            ("review_hidden", self.review_hidden),
            ("max_sentences", self.max_sentences),
            ("max_words", self.max_words),
            ("outputs", self.outputs),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(config_err!("{name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(config_err!("dropout must be in [0, 1), got {}", self.dropout));
        }
        Ok(())
    }
}
