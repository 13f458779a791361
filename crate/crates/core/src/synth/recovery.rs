//! Scores how well target embeddings recover the cipher's polarity classes.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{config_err, data_err, Result};
use crate::eval::{neighbors, TableRef};
use crate::model::Model;
use crate::numcore::Scalar;
use crate::textpipe::RESERVED;
use crate::transfer::LanguagePair;

use super::{Polarity, TruthMap};

/// Polarity agreement and exact cipher recovery over the scored words.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryScore {
    pub words: usize,
    pub top_k: usize,
    pub agreement_rate: f64,
    pub exact_rate: f64,
    /// Expected agreement rate if neighbours were drawn at random.
    pub chance_rate: f64,
    /// Standard deviation of the agreement rate under random neighbours.
    pub chance_std: f64,
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let ln_fact = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// Probability that more than half of `k` tokens drawn without replacement
/// from `population` tokens, `matching` of which share the query's class,
/// share that class.
pub fn chance_agreement(population: usize, matching: usize, k: usize) -> Result<f64> {
    if k == 0 || k > population || matching > population {
        return Err(config_err!(
            "invalid draw: k={k} from {population} with {matching} matching"
        ));
    }
    let denom = ln_choose(population, k);
    let p = (k / 2 + 1..=k.min(matching))
        .filter(|&x| k - x <= population - matching)
        .map(|x| (ln_choose(matching, x) + ln_choose(population - matching, k - x) - denom).exp())
        .sum::<f64>();
    Ok(p.min(1.0))
}

/// Takes the `word_budget` most frequent polarity words of the source
/// vocabulary and checks their `top_k` target neighbours against the truth map.
pub fn score_neighbor_recovery<T: Scalar>(
    model: &Model<T>,
    langs: &LanguagePair,
    truth: &TruthMap,
    top_k: usize,
    word_budget: usize,
) -> Result<RecoveryScore> {
    let source = TableRef::of(model, &langs.source)?;
    let target = TableRef::of(model, &langs.target)?;
    let source_polarity = truth.polarity_of_source();
    let target_polarity = truth.polarity_of_target();

    // vocabulary order is frequency order
    let queries: Vec<(&str, Polarity)> = source
        .vocab
        .tokens()
        .iter()
        .filter_map(|t| match source_polarity.get(t.as_str()) {
            Some(&p) if p != Polarity::Neutral => Some((t.as_str(), p)),
            _ => None,
        })
        .take(word_budget)
        .collect();
    if queries.is_empty() {
        return Err(data_err!(
            "no polarity words of the truth map are in the {} vocabulary",
            langs.source
        ));
    }

    let population = target.vocab.len() - RESERVED;
    let mut class_sizes: HashMap<Polarity, usize> = HashMap::new();
    for t in target.vocab.tokens() {
        if let Some(&p) = target_polarity.get(t.as_str()) {
            *class_sizes.entry(p).or_default() += 1;
        }
    }

    let (mut agree, mut exact, mut chance_mean, mut chance_var) = (0usize, 0usize, 0.0, 0.0);
    for &(query, polarity) in &queries {
        let list = neighbors(query, source, target, top_k)?;
        let same = list
            .neighbors
            .iter()
            .filter(|n| target_polarity.get(n.token.as_str()) == Some(&polarity))
            .count();
        if 2 * same > list.neighbors.len() {
            agree += 1;
        }
        let image = truth.target_of(query).map(|e| e.target.as_str());
        if list.neighbors.first().map(|n| n.token.as_str()) == image {
            exact += 1;
        }
        let p = chance_agreement(
            population,
            class_sizes.get(&polarity).copied().unwrap_or(0),
            top_k.min(population),
        )?;
        chance_mean += p;
        chance_var += p * (1.0 - p);
    }
    let n = queries.len() as f64;
    Ok(RecoveryScore {
        words: queries.len(),
        top_k,
        agreement_rate: agree as f64 / n,
        exact_rate: exact as f64 / n,
        chance_rate: chance_mean / n,
        chance_std: chance_var.sqrt() / n,
    })
}
