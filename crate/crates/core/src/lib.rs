//! Cross-lingual transfer of a hierarchical GRU sentiment classifier.
//!
//! A classifier is trained on labelled source-language reviews and carried to
//! a target language by matching its task representations on parallel text:
//! target-language embeddings are fitted so that the shared encoder produces
//! the same representation for both sides of each parallel pair. At
//! prediction time the source embedding table is swapped for the target one.
//!
//! The numeric core is generic over [`numcore::Scalar`]; training runs in
//! `f32` and gradient checks in `f64`.

pub mod cli;
pub mod error;
pub mod eval;
pub mod model;
pub mod numcore;
pub mod synth;
pub mod textpipe;
pub mod transfer;

pub use error::{Error, Result};

pub type Tensor32 = numcore::Tensor<f32>;
pub type Tensor64 = numcore::Tensor<f64>;
pub type ParamStore32 = numcore::ParamStore<f32>;
pub type ParamStore64 = numcore::ParamStore<f64>;
pub use model::{Model32, Model64};
