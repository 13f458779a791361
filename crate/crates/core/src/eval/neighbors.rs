use serde::Serialize;

use crate::error::{config_err, data_err, dim_err, Result};
use crate::model::Model;
use crate::numcore::{Scalar, Tensor};
use crate::textpipe::{Vocabulary, RESERVED};

/// An embedding table paired with the vocabulary indexing its rows.
#[derive(Clone, Copy, Debug)]
pub struct TableRef<'a, T> {
    pub vocab: &'a Vocabulary,
    pub table: &'a Tensor<T>,
}

impl<'a, T: Scalar> TableRef<'a, T> {
    pub fn of(model: &'a Model<T>, lang: &str) -> Result<Self> {
        let entry = model.language(lang)?;
        Ok(Self {
            vocab: &entry.vocab,
            table: model.store().value(entry.table),
        })
    }

    fn check(&self) -> Result<usize> {
        let (rows, cols) = self.table.dims2();
        if rows != self.vocab.len() {
            return Err(dim_err!(
                "table for {} has {rows} rows but the vocabulary has {} entries",
                self.vocab.lang(),
                self.vocab.len()
            ));
        }
        Ok(cols)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Neighbor {
    pub token: String,
    pub score: f64,
}

/// Target-language tokens ranked by cosine similarity to a source token.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborList {
    pub query: String,
    pub lang: String,
    pub neighbors: Vec<Neighbor>,
}

/// Cosine similarity clamped to [-1, 1]; 0 when either vector is zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.to_f64().unwrap_or(0.0), y.to_f64().unwrap_or(0.0));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Top `k` target tokens for `query`. Ties keep vocabulary order.
pub fn neighbors<T: Scalar>(
    query: &str,
    source: TableRef<'_, T>,
    target: TableRef<'_, T>,
    k: usize,
) -> Result<NeighborList> {
    if k == 0 {
        return Err(config_err!("k must be at least 1"));
    }
    let (ds, dt) = (source.check()?, target.check()?);
    if ds != dt {
        return Err(dim_err!("embedding widths differ: {ds} vs {dt}"));
    }
    let id = source
        .vocab
        .get(query)
        .filter(|&id| id as usize >= RESERVED)
        .ok_or_else(|| data_err!("token {query:?} is not in the {} vocabulary", source.vocab.lang()))?;
    let q = source.table.row(id as usize);
    let mut scored: Vec<(usize, f64)> = (RESERVED..target.vocab.len())
        .map(|j| (j, cosine(q, target.table.row(j))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(NeighborList {
        query: query.to_string(),
        lang: target.vocab.lang().to_string(),
        neighbors: scored
            .into_iter()
            .map(|(j, score)| Neighbor {
                token: target.vocab.decode(j as u32).unwrap_or_default().to_string(),
                score,
            })
            .collect(),
    })
}
