//! Labelled and parallel-data objectives and the two training regimes.

mod config;
mod data;
mod losses;
mod train;

use crate::error::Result;
use crate::model::{Model, ModelView};
use crate::numcore::Scalar;

pub use config::{Regime, SupervisionMode, TransferConfig};
pub use data::{build_paragraphs, encode_docs};
pub use losses::{
    label_projection_loss, label_projection_loss_node, label_projection_term, labeled_loss, labeled_loss_node,
    projection_loss, projection_loss_node, pseudo_label, representation_mse, representation_mse_node,
};
pub use train::{
    derive_seed, train, train_joint, train_labeled_only, train_two_stage, LanguagePair, LossBreakdown, TrainLog,
    TrainOutcome, LOSS_CSV_HEADER,
};

/// Prediction-time view that reads `lang` embeddings through the shared
/// encoder and head.
pub fn swap_embeddings<'m, T: Scalar>(model: &'m Model<T>, lang: &str) -> Result<ModelView<'m, T>> {
    model.view(lang)
}
