//! Hierarchical GRU classifier with per-language embedding tables and a
//! shared encoder and prediction head.

pub mod checkpoint;
mod config;
mod encoder;
mod gru;
mod head;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{config_err, dim_err, Result};
use crate::numcore::{Graph, Init, NodeId, ParamStore, Scalar, SlotId};
use crate::textpipe::{Grid, Vocabulary};

pub use config::ModelConfig;
pub use encoder::{encode_batch, DropoutMasks};
pub use gru::{gru_step, GruParams};
pub use head::{predict_binary, predict_k};

/// Half-width of the uniform initialisation of embedding rows.
pub const EMBED_INIT: f64 = 0.05;

/// Encoder parameters shared by every language.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedEncoder {
    pub sentence: GruParams,
    pub review: GruParams,
}

impl SharedEncoder {
    pub fn slots(&self) -> Vec<SlotId> {
        self.sentence.slots().into_iter().chain(self.review.slots()).collect()
    }
}

/// Output layer reading the task representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionHead {
    /// `[d_T, K]`
    pub weight: SlotId,
    /// `[K]`
    pub bias: SlotId,
    pub outputs: usize,
}

/// A language's vocabulary and the slot holding its `|V| x d` embedding table.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocabulary,
    pub table: SlotId,
}

/// Task representation `R^T` of one input.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskRepresentation<T>(pub Vec<T>);

#[derive(Clone, Debug)]
pub struct Model<T> {
    config: ModelConfig,
    store: ParamStore<T>,
    languages: Vec<EmbeddingTable>,
    encoder: SharedEncoder,
    head: PredictionHead,
}

pub type Model32 = Model<f32>;
pub type Model64 = Model<f64>;

pub fn embedding_slot_name(lang: &str) -> String {
    format!("embed.{lang}")
}

impl<T: Scalar> Model<T> {
    /// Fresh model with one embedding table per vocabulary, in the given order.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, vocabs: Vec<Vocabulary>, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if vocabs.is_empty() {
            return Err(config_err!("a model needs at least one language"));
        }
        let mut store = ParamStore::new();
        let mut languages = Vec::with_capacity(vocabs.len());
        for vocab in vocabs {
            if languages
                .iter()
                .any(|l: &EmbeddingTable| l.vocab.lang() == vocab.lang())
            {
                return Err(config_err!("language {} listed twice", vocab.lang()));
            }
            let table = store.insert_init(
                embedding_slot_name(vocab.lang()),
                &[vocab.len(), config.embed_dim],
                Init::Uniform(EMBED_INIT),
                rng,
            )?;
            languages.push(EmbeddingTable { vocab, table });
        }
        let encoder = SharedEncoder {
            sentence: GruParams::register(
                &mut store,
                "sentence_gru",
                config.embed_dim,
                config.sentence_hidden,
                rng,
            )?,
            review: GruParams::register(
                &mut store,
                "review_gru",
                config.sentence_hidden,
                config.review_hidden,
                rng,
            )?,
        };
        let head = PredictionHead {
            weight: store.insert_init(
                "head.weight",
                &[config.review_hidden, config.outputs],
                Init::Glorot,
                rng,
            )?,
            bias: store.insert_init("head.bias", &[config.outputs], Init::Zeros, rng)?,
            outputs: config.outputs,
        };
        Ok(Self {
            config,
            store,
            languages,
            encoder,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn languages(&self) -> &[EmbeddingTable] {
        &self.languages
    }

    pub fn language(&self, lang: &str) -> Result<&EmbeddingTable> {
        self.languages
            .iter()
            .find(|l| l.vocab.lang() == lang)
            .ok_or_else(|| config_err!("model has no embedding table for language {lang:?}"))
    }

    pub fn encoder(&self) -> &SharedEncoder {
        &self.encoder
    }

    pub fn head(&self) -> &PredictionHead {
        &self.head
    }

    /// Encoder and head slots: everything except the embedding tables.
    pub fn shared_slots(&self) -> Vec<SlotId> {
        let mut s = self.encoder.slots();
        s.extend([self.head.weight, self.head.bias]);
        s
    }

    /// Inference view bound to one language's embeddings.
    pub fn view(&self, lang: &str) -> Result<ModelView<'_, T>> {
        let table = self.language(lang)?;
        Ok(ModelView { model: self, table })
    }

    /// Same model in another scalar type (optimizer state is dropped).
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            config: self.config,
            store: self.store.cast(),
            languages: self.languages.clone(),
            encoder: self.encoder.clone(),
            head: self.head.clone(),
        }
    }
}

/// A model bound to one language: that language's embeddings plus the shared
/// encoder and head (borrowed, never copied).
#[derive(Clone, Copy, Debug)]
pub struct ModelView<'m, T> {
    model: &'m Model<T>,
    table: &'m EmbeddingTable,
}

const EVAL_CHUNK: usize = 64;

impl<'m, T: Scalar> ModelView<'m, T> {
    pub fn model(&self) -> &'m Model<T> {
        self.model
    }

    pub fn lang(&self) -> &'m str {
        self.table.vocab.lang()
    }

    pub fn vocab(&self) -> &'m Vocabulary {
        &self.table.vocab
    }

    pub fn embeddings(&self) -> SlotId {
        self.table.table
    }

    pub fn encoder(&self) -> &'m SharedEncoder {
        &self.model.encoder
    }

    pub fn head(&self) -> &'m PredictionHead {
        &self.model.head
    }

    /// Records `[B, d_T]` representations on `g`.
    pub fn encode_node(&self, g: &mut Graph<'_, T>, grids: &[&Grid], masks: &DropoutMasks<T>) -> Result<NodeId> {
        encode_batch(
            g,
            &self.model.config,
            &self.model.encoder,
            self.table.table,
            grids,
            masks,
        )
    }

    /// Records `[B, 1]` positive-class probabilities on `g`.
    pub fn probability_node(&self, g: &mut Graph<'_, T>, repr: NodeId) -> Result<NodeId> {
        if self.model.head.outputs != 1 {
            return Err(dim_err!("binary probabilities need a single-output head"));
        }
        let (w, b) = (g.param(self.model.head.weight), g.param(self.model.head.bias));
        let logits = g.matmul(repr, w)?;
        let logits = g.add_row(logits, b)?;
        g.sigmoid(logits)
    }

    /// Task representation of one grid.
    pub fn encode<R: Rng + ?Sized>(&self, grid: &Grid, training: bool, rng: &mut R) -> Result<TaskRepresentation<T>> {
        let masks = DropoutMasks::sample(&self.model.config, 1, training, rng)?;
        let mut g = Graph::new(&self.model.store);
        let node = self.encode_node(&mut g, &[grid], &masks)?;
        Ok(TaskRepresentation(g.value(node).data().to_vec()))
    }

    /// Inference-mode representations, one row per grid.
    pub fn representations(&self, grids: &[Grid]) -> Result<Vec<TaskRepresentation<T>>> {
        let chunks: Vec<Vec<TaskRepresentation<T>>> = grids
            .par_chunks(EVAL_CHUNK)
            .map(|chunk| {
                let refs: Vec<&Grid> = chunk.iter().collect();
                let mut g = Graph::new(&self.model.store);
                let node = self.encode_node(&mut g, &refs, &DropoutMasks::none())?;
                let (_, width) = g.value(node).dims2();
                Ok(g.value(node)
                    .data()
                    .chunks(width)
                    .map(|r| TaskRepresentation(r.to_vec()))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }

    /// Inference-mode positive-class probabilities.
    pub fn predict_proba(&self, grids: &[Grid]) -> Result<Vec<T>> {
        let store = &self.model.store;
        let w = store.value(self.model.head.weight);
        let b = store.value(self.model.head.bias);
        self.representations(grids)?
            .iter()
            .map(|r| predict_binary(&r.0, w, b))
            .collect()
    }

    /// Class distribution for a multi-output head.
    pub fn predict_distribution(&self, grids: &[Grid]) -> Result<Vec<Vec<T>>> {
        let store = &self.model.store;
        let w = store.value(self.model.head.weight);
        let b = store.value(self.model.head.bias);
        self.representations(grids)?
            .iter()
            .map(|r| predict_k(&r.0, w, b))
            .collect()
    }
}

#[cfg(test)]
mod tests;
