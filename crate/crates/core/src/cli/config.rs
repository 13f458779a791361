//! Flat `key = value` configuration shared by config files and flags.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{config_err, Error, Result};
use crate::eval::pipeline::{DEFAULT_MAX_VOCAB, DEFAULT_MIN_COUNT};
use crate::model::ModelConfig;
use crate::transfer::{LanguagePair, Regime, SupervisionMode, TransferConfig};

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; a repeated key is an error.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err!("config line {}: expected key = value", n + 1))?;
        let key = key.trim().replace('-', "_");
        if !seen.insert(key.clone()) {
            return Err(config_err!("config line {}: duplicate key {key}", n + 1));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text).map_err(|e| match e {
        Error::Config(msg) => config_err!("{}: {msg}", path.display()),
        other => other,
    })
}

fn parse_scalar(raw: &str, like: &Value) -> Result<Value> {
    Ok(match like {
        Value::String(_) | Value::Null => Value::String(raw.to_string()),
        _ => serde_json::from_str(raw).map_err(|_| config_err!("cannot parse {raw:?}"))?,
    })
}

/// Sets one field of a flat serde struct from its textual value. Unknown keys
/// and unparsable values are configuration errors.
pub fn apply_key<T: Serialize + DeserializeOwned>(target: &mut T, key: &str, raw: &str) -> Result<()> {
    let mut value = serde_json::to_value(&*target).expect("config serialises");
    let map = value.as_object_mut().expect("config is a struct");
    let slot = map.get_mut(key).ok_or_else(|| config_err!("unknown key {key:?}"))?;
    *slot = match &*slot {
        Value::Array(items) => {
            let like = items.first().cloned().unwrap_or(Value::from(0));
            let parts: Result<Vec<Value>> = raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_scalar(s, &like))
                .collect();
            Value::Array(parts.map_err(|e| config_err!("{key}: {e}"))?)
        }
        other => parse_scalar(raw, other).map_err(|e| config_err!("{key}: {e}"))?,
    };
    *target = serde_json::from_value(value).map_err(|e| config_err!("{key}: {e}"))?;
    Ok(())
}

pub fn apply_all<T: Serialize + DeserializeOwned>(target: &mut T, pairs: &[(String, String)]) -> Result<()> {
    pairs.iter().try_for_each(|(k, v)| apply_key(target, k, v))
}

/// Every setting of a training or sweep run. Defaults reproduce the
/// reference configuration: 64-dimensional embeddings, 256-unit encoders,
/// a 30 x 20 input grid, dropout 0.5, RMSProp and 10/10 or 4/12 epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub embed_dim: usize,
    pub sentence_hidden: usize,
    pub review_hidden: usize,
    pub max_sentences: usize,
    pub max_words: usize,
    pub dropout: f64,
    pub regime: Regime,
    pub supervision: SupervisionMode,
    pub alpha: f64,
    pub labeled_epochs: usize,
    pub projection_epochs: usize,
    pub pretrain_epochs: usize,
    pub joint_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub seed: u64,
    pub source_lang: String,
    pub target_lang: String,
    pub labeled: Option<PathBuf>,
    pub parallel_source: Option<PathBuf>,
    pub parallel_target: Option<PathBuf>,
    pub source_vocab: Option<PathBuf>,
    pub target_vocab: Option<PathBuf>,
    pub source_test: Option<PathBuf>,
    pub target_test: Option<PathBuf>,
    pub min_count: usize,
    pub max_vocab: usize,
    pub embed_dims: Vec<usize>,
    pub encode_dims: Vec<usize>,
    pub runs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let t = TransferConfig::default();
        Self {
            embed_dim: m.embed_dim,
            sentence_hidden: m.sentence_hidden,
            review_hidden: m.review_hidden,
            max_sentences: m.max_sentences,
            max_words: m.max_words,
            dropout: m.dropout,
            regime: Regime::Joint,
            supervision: t.supervision,
            alpha: t.alpha,
            labeled_epochs: t.labeled_epochs,
            projection_epochs: t.projection_epochs,
            pretrain_epochs: t.pretrain_epochs,
            joint_epochs: t.joint_epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            rms_decay: t.rms_decay,
            rms_eps: t.rms_eps,
            seed: t.seed,
            source_lang: "src".into(),
            target_lang: "tgt".into(),
            labeled: None,
            parallel_source: None,
            parallel_target: None,
            source_vocab: None,
            target_vocab: None,
            source_test: None,
            target_test: None,
            min_count: DEFAULT_MIN_COUNT,
            max_vocab: DEFAULT_MAX_VOCAB,
            embed_dims: vec![48, 64],
            encode_dims: vec![256, 512],
            runs: 1,
        }
    }
}

impl RunConfig {
    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            embed_dim: self.embed_dim,
            sentence_hidden: self.sentence_hidden,
            review_hidden: self.review_hidden,
            max_sentences: self.max_sentences,
            max_words: self.max_words,
            outputs: 1,
            dropout: self.dropout,
        }
    }

    pub fn transfer(&self) -> TransferConfig {
        TransferConfig {
            alpha: self.alpha,
            labeled_epochs: self.labeled_epochs,
            projection_epochs: self.projection_epochs,
            pretrain_epochs: self.pretrain_epochs,
            joint_epochs: self.joint_epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            supervision: self.supervision,
            learning_rate: self.learning_rate,
            rms_decay: self.rms_decay,
            rms_eps: self.rms_eps,
        }
    }

    pub fn langs(&self) -> LanguagePair {
        LanguagePair::new(&self.source_lang, &self.target_lang)
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        self.transfer().validate()?;
        if self.source_lang.is_empty() || self.source_lang == self.target_lang {
            return Err(config_err!(
                "source and target languages must be distinct and non-empty"
            ));
        }
        if self.min_count == 0 {
            return Err(config_err!("min_count must be at least 1"));
        }
        if self.runs == 0 {
            return Err(config_err!("runs must be at least 1"));
        }
        if self.embed_dims.contains(&0) || self.encode_dims.contains(&0) {
            return Err(config_err!("sweep dimensions must be positive"));
        }
        Ok(())
    }

    /// The path stored under `key`, or a configuration error naming it.
    pub fn require(&self, key: &str) -> Result<&Path> {
        let path = match key {
            "labeled" => &self.labeled,
            "parallel_source" => &self.parallel_source,
            "parallel_target" => &self.parallel_target,
            "source_vocab" => &self.source_vocab,
            "target_vocab" => &self.target_vocab,
            "source_test" => &self.source_test,
            "target_test" => &self.target_test,
            other => return Err(config_err!("no path setting {other:?}")),
        };
        path.as_deref()
            .ok_or_else(|| config_err!("missing required setting {key}"))
    }
}
