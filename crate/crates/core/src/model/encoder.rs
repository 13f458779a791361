use std::collections::HashMap;

use rand::Rng;

use crate::error::{dim_err, Result};
use crate::numcore::{dropout_mask, Graph, NodeId, Scalar, SlotId, Tensor};
use crate::textpipe::{Grid, PAD};

use super::{ModelConfig, SharedEncoder};

/// Dropout masks for one batch: sentence vectors `[S·B, h]` and task
/// representations `[B, d_T]`. Paired branches of the projection loss reuse
/// the same masks.
#[derive(Clone, Debug)]
pub struct DropoutMasks<T> {
    pub sentence: Option<Tensor<T>>,
    pub representation: Option<Tensor<T>>,
}

impl<T: Scalar> DropoutMasks<T> {
    pub fn none() -> Self {
        Self {
            sentence: None,
            representation: None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(config: &ModelConfig, batch: usize, training: bool, rng: &mut R) -> Result<Self> {
        Ok(Self {
            sentence: dropout_mask(
                &[config.max_sentences * batch, config.sentence_hidden],
                config.dropout,
                training,
                rng,
            )?,
            representation: dropout_mask(&[batch, config.review_hidden], config.dropout, training, rng)?,
        })
    }
}

/// Records the hierarchical encoder on `g` for a batch of grids and returns
/// the `[B, d_T]` task representations.
///
/// PAD words and all-PAD sentences leave the recurrent state unchanged.
/// Identical sentence rows are run through the sentence GRU once and then
/// broadcast back to their positions.
pub fn encode_batch<T: Scalar>(
    g: &mut Graph<'_, T>,
    config: &ModelConfig,
    encoder: &SharedEncoder,
    table: SlotId,
    grids: &[&Grid],
    masks: &DropoutMasks<T>,
) -> Result<NodeId> {
    let (s_len, w_len) = (config.max_sentences, config.max_words);
    let batch = grids.len();
    if batch == 0 {
        return Err(dim_err!("empty batch"));
    }
    for grid in grids {
        if grid.sentences() != s_len || grid.words() != w_len {
            return Err(dim_err!(
                "grid {}x{} does not match model {}x{}",
                grid.sentences(),
                grid.words(),
                s_len,
                w_len
            ));
        }
    }

    let mut unique: HashMap<&[u32], usize> = HashMap::new();
    let mut order: Vec<&[u32]> = Vec::new();
    // position s·B + b -> unique sentence index
    let mut positions = vec![0usize; s_len * batch];
    for s in 0..s_len {
        for (b, grid) in grids.iter().enumerate() {
            let sentence = grid.sentence(s);
            let idx = *unique.entry(sentence).or_insert_with(|| {
                order.push(sentence);
                order.len() - 1
            });
            positions[s * batch + b] = idx;
        }
    }
    let n_unique = order.len();
    let mut ids = Vec::with_capacity(w_len * n_unique);
    for t in 0..w_len {
        ids.extend(order.iter().map(|sentence| sentence[t] as usize));
    }

    let word_active: Vec<bool> = ids.iter().map(|&id| id != PAD as usize).collect();
    let sentence_active: Vec<bool> = positions
        .iter()
        .map(|&u| order[u].iter().any(|&id| id != PAD))
        .collect();

    let embedded = g.gather(table, ids)?;
    let sentence_states = encoder
        .sentence
        .run_masked(g, embedded, w_len, n_unique, Some(&word_active))?;
    let mut sentences = g.gather_rows(sentence_states, positions)?;
    if let Some(mask) = &masks.sentence {
        sentences = g.mul_const(sentences, mask.clone())?;
    }
    let mut repr = encoder
        .review
        .run_masked(g, sentences, s_len, batch, Some(&sentence_active))?;
    if let Some(mask) = &masks.representation {
        repr = g.mul_const(repr, mask.clone())?;
    }
    Ok(repr)
}
