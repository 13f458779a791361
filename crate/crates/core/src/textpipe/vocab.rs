use std::collections::HashMap;

use crate::error::{config_err, data_err, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const RESERVED: usize = 2;

/// Bidirectional token/id map for one language. Ids 0 and 1 are PAD and UNK.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    lang: String,
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from the non-reserved tokens in id order.
    pub fn from_tokens(lang: impl Into<String>, tokens: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut id_to_token = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut token_to_id = HashMap::new();
        for tok in tokens {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(data_err!("invalid vocabulary token {tok:?}"));
            }
            if tok == PAD_TOKEN || tok == UNK_TOKEN {
                return Err(data_err!("reserved token {tok} listed explicitly"));
            }
            let id = id_to_token.len() as u32;
            if token_to_id.insert(tok.clone(), id).is_some() {
                return Err(data_err!("duplicate vocabulary token {tok:?}"));
            }
            id_to_token.push(tok);
        }
        Ok(Self {
            lang: lang.into(),
            id_to_token,
            token_to_id,
        })
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.len() <= RESERVED
    }

    /// Id of `token`, or UNK.
    pub fn encode(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn decode(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Non-reserved tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.id_to_token[RESERVED..]
    }
}

/// Frequency-ranked vocabulary: tokens seen at least `min_count` times, most
/// frequent first with lexicographic tiebreak, capped at `max_size` entries
/// including PAD and UNK.
pub fn build_vocab<I, S>(lang: &str, corpus: I, min_count: usize, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[String]>,
{
    if min_count < 1 {
        return Err(config_err!("min_count must be at least 1"));
    }
    if max_size < RESERVED {
        return Err(config_err!("max_size must leave room for PAD and UNK"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let corpus: Vec<S> = corpus.into_iter().collect();
    let mut total = 0usize;
    for stream in &corpus {
        for tok in stream.as_ref() {
            *counts.entry(tok.as_str()).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(data_err!("cannot build a vocabulary from an empty corpus"));
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size - RESERVED);
    Vocabulary::from_tokens(lang, ranked.into_iter().map(|(t, _)| t.to_string()))
}
