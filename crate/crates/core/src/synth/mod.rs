//! Synthetic bilingual sentiment benchmark.
//!
//! The source language is a bag of sentiment-bearing and neutral tokens; the
//! target language is its word-level cipher image, optionally corrupted on
//! the parallel side by random confounders. Because the cipher is known, the
//! quality of a transfer (and of learned cross-lingual neighbours) can be
//! scored against ground truth.

mod recovery;

use std::fmt;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, data_err, Error, Result};
use crate::textpipe::io::{write_labeled, write_lines};
use crate::textpipe::ReviewRecord;
use crate::transfer::derive_seed;

pub use recovery::{chance_agreement, score_neighbor_recovery, RecoveryScore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// Source word types (the target language has the same number).
    pub vocab_size: usize,
    pub positive_words: usize,
    pub negative_words: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Probability that a token is drawn from a polarity lexicon (1:4 → 0.2).
    pub polarity_rate: f64,
    /// Probability that a polarity token agrees with the review label.
    pub label_consistency: f64,
    /// Zipf exponent for word frequencies within each lexicon.
    pub zipf: f64,
    /// Probability that a parallel target token is replaced by a random other word.
    pub noise: f64,
    pub labeled: usize,
    pub parallel: usize,
    pub test: usize,
    pub seed: u64,
    pub source_lang: String,
    pub target_lang: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            vocab_size: 400,
            positive_words: 40,
            negative_words: 40,
            min_sentences: 5,
            max_sentences: 12,
            min_words: 4,
            max_words: 6,
            polarity_rate: 0.2,
            label_consistency: 0.9,
            zipf: 0.7,
            noise: 0.0,
            labeled: 2000,
            parallel: 3000,
            test: 500,
            seed: 0,
            source_lang: "src".into(),
            target_lang: "tgt".into(),
        }
    }
}

impl SynthSpec {
    pub fn neutral_words(&self) -> usize {
        self.vocab_size
            .saturating_sub(self.positive_words + self.negative_words)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positive_words == 0 || self.negative_words == 0 {
            return Err(config_err!("both polarity lexicons need at least one word"));
        }
        if self.positive_words + self.negative_words >= self.vocab_size {
            return Err(config_err!(
                "lexicon sizes must leave room for neutral words within vocab_size"
            ));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(config_err!("noise must be in [0, 1), got {}", self.noise));
        }
        if !(0.0..=1.0).contains(&self.polarity_rate) || !(0.0..=1.0).contains(&self.label_consistency) {
            return Err(config_err!("polarity_rate and label_consistency must be probabilities"));
        }
        if !(self.zipf >= 0.0 && self.zipf.is_finite()) {
            return Err(config_err!("zipf exponent must be non-negative"));
        }
        if self.min_sentences == 0 || self.min_sentences > self.max_sentences {
            return Err(config_err!(
                "sentence range {}..={} is empty",
                self.min_sentences,
                self.max_sentences
            ));
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return Err(config_err!(
                "word range {}..={} is empty",
                self.min_words,
                self.max_words
            ));
        }
        if self.labeled == 0 || self.parallel == 0 || self.test == 0 {
            return Err(config_err!("corpus sizes must be positive"));
        }
        if self.source_lang == self.target_lang || self.source_lang.is_empty() || self.target_lang.is_empty() {
            return Err(config_err!(
                "source and target language tags must be distinct and non-empty"
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        })
    }
}

impl std::str::FromStr for Polarity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            other => Err(data_err!("unknown polarity {other:?}")),
        }
    }
}

/// One row of the ground-truth cipher.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthEntry {
    pub source: String,
    pub target: String,
    pub polarity: Polarity,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TruthMap {
    pub entries: Vec<TruthEntry>,
}

impl TruthMap {
    pub fn target_of(&self, source: &str) -> Option<&TruthEntry> {
        self.entries.iter().find(|e| e.source == source)
    }

    pub fn polarity_of_target(&self) -> std::collections::HashMap<&str, Polarity> {
        self.entries.iter().map(|e| (e.target.as_str(), e.polarity)).collect()
    }

    pub fn polarity_of_source(&self) -> std::collections::HashMap<&str, Polarity> {
        self.entries.iter().map(|e| (e.source.as_str(), e.polarity)).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("source_token\ttarget_token\tpolarity\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\n", e.source, e.target, e.polarity));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [source, target, polarity] = cols[..] else {
                return Err(data_err!("truth map line {}: expected 3 columns", n + 1));
            };
            entries.push(TruthEntry {
                source: source.to_string(),
                target: target.to_string(),
                polarity: polarity.parse()?,
            });
        }
        Ok(Self { entries })
    }
}

/// Everything [`generate`] produces.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub labeled: Vec<ReviewRecord>,
    pub source_test: Vec<ReviewRecord>,
    pub target_test: Vec<ReviewRecord>,
    pub parallel_source: Vec<String>,
    pub parallel_target: Vec<String>,
    pub truth: TruthMap,
}

/// Paths of the files written by [`SynthCorpus::write`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthFiles {
    pub labeled: PathBuf,
    pub source_test: PathBuf,
    pub target_test: PathBuf,
    pub parallel_source: PathBuf,
    pub parallel_target: PathBuf,
    pub truth: PathBuf,
}

impl SynthFiles {
    pub fn in_dir(dir: &Path, source: &str, target: &str) -> Self {
        Self {
            labeled: dir.join(format!("train.{source}.jsonl")),
            source_test: dir.join(format!("test.{source}.jsonl")),
            target_test: dir.join(format!("test.{target}.jsonl")),
            parallel_source: dir.join(format!("parallel.{source}.txt")),
            parallel_target: dir.join(format!("parallel.{target}.txt")),
            truth: dir.join("truth_map.tsv"),
        }
    }

    pub fn all(&self) -> [&Path; 6] {
        [
            &self.labeled,
            &self.source_test,
            &self.target_test,
            &self.parallel_source,
            &self.parallel_target,
            &self.truth,
        ]
    }
}

impl SynthCorpus {
    pub fn write(&self, dir: &Path, spec: &SynthSpec) -> Result<SynthFiles> {
        let files = SynthFiles::in_dir(dir, &spec.source_lang, &spec.target_lang);
        write_labeled(&files.labeled, &self.labeled)?;
        write_labeled(&files.source_test, &self.source_test)?;
        write_labeled(&files.target_test, &self.target_test)?;
        write_lines(&files.parallel_source, &self.parallel_source)?;
        write_lines(&files.parallel_target, &self.parallel_target)?;
        std::fs::write(&files.truth, self.truth.to_tsv()).map_err(|e| Error::io(&files.truth, e))?;
        Ok(files)
    }
}

/// Word ids `0..vocab_size`: positives first, then negatives, then neutrals.
struct Lexicon {
    positive: Vec<usize>,
    negative: Vec<usize>,
    neutral: Vec<usize>,
    pos_dist: WeightedIndex<f64>,
    neg_dist: WeightedIndex<f64>,
    neu_dist: WeightedIndex<f64>,
}

fn zipf_weights(n: usize, exponent: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-exponent))).expect("non-empty lexicon")
}

impl Lexicon {
    fn new(spec: &SynthSpec) -> Self {
        let (p, n) = (spec.positive_words, spec.negative_words);
        Self {
            positive: (0..p).collect(),
            negative: (p..p + n).collect(),
            neutral: (p + n..spec.vocab_size).collect(),
            pos_dist: zipf_weights(p, spec.zipf),
            neg_dist: zipf_weights(n, spec.zipf),
            neu_dist: zipf_weights(spec.vocab_size - p - n, spec.zipf),
        }
    }

    fn polarity(&self, word: usize) -> Polarity {
        if word < self.positive.len() {
            Polarity::Positive
        } else if word < self.positive.len() + self.negative.len() {
            Polarity::Negative
        } else {
            Polarity::Neutral
        }
    }
}

fn source_token(id: usize) -> String {
    format!("s{id:04}")
}

fn target_token(id: usize) -> String {
    format!("t{id:04}")
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    lex: Lexicon,
    cipher: Vec<usize>,
}

impl Generator<'_> {
    /// One review as sentences of source word ids.
    fn review<R: Rng>(&self, label: u8, rng: &mut R) -> Vec<Vec<usize>> {
        let s = self.spec;
        let n_sent = rng.gen_range(s.min_sentences..=s.max_sentences);
        (0..n_sent)
            .map(|_| {
                let n_words = rng.gen_range(s.min_words..=s.max_words);
                (0..n_words).map(|_| self.word(label, rng)).collect()
            })
            .collect()
    }

    fn word<R: Rng>(&self, label: u8, rng: &mut R) -> usize {
        let lex = &self.lex;
        if rng.gen_bool(self.spec.polarity_rate) {
            let positive = (label == 1) == rng.gen_bool(self.spec.label_consistency);
            if positive {
                lex.positive[lex.pos_dist.sample(rng)]
            } else {
                lex.negative[lex.neg_dist.sample(rng)]
            }
        } else {
            lex.neutral[lex.neu_dist.sample(rng)]
        }
    }

    fn balanced_labels<R: Rng>(n: usize, rng: &mut R) -> Vec<u8> {
        let mut labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        labels.shuffle(rng);
        labels
    }

    fn render(sentences: &[Vec<usize>], token: impl Fn(usize) -> String) -> Vec<String> {
        sentences
            .iter()
            .map(|s| s.iter().map(|&w| token(w)).collect::<Vec<_>>().join(" "))
            .collect()
    }

    fn labeled_set(&self, n: usize, stream: u64, cipher: bool) -> Vec<ReviewRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.spec.seed, stream, 0));
        let labels = Self::balanced_labels(n, &mut rng);
        labels
            .into_iter()
            .map(|label| {
                let review = self.review(label, &mut rng);
                let sentences = if cipher {
                    Self::render(&review, |w| target_token(self.cipher[w]))
                } else {
                    Self::render(&review, source_token)
                };
                ReviewRecord {
                    stars: None,
                    label: Some(label),
                    sentences,
                }
            })
            .collect()
    }
}

const STREAM_CIPHER: u64 = 101;
const STREAM_LABELED: u64 = 102;
const STREAM_SOURCE_TEST: u64 = 103;
const STREAM_TARGET_TEST: u64 = 104;
const STREAM_PARALLEL: u64 = 105;
const STREAM_NOISE: u64 = 106;

/// Generates the whole benchmark; a pure function of `spec`.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut cipher: Vec<usize> = (0..spec.vocab_size).collect();
    cipher.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_CIPHER, 0)));
    let gen = Generator {
        spec,
        lex: Lexicon::new(spec),
        cipher,
    };

    let labeled = gen.labeled_set(spec.labeled, STREAM_LABELED, false);
    let source_test = gen.labeled_set(spec.test, STREAM_SOURCE_TEST, false);
    let target_test = gen.labeled_set(spec.test, STREAM_TARGET_TEST, true);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_PARALLEL, 0));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_NOISE, 0));
    let mut parallel_source = Vec::with_capacity(spec.parallel);
    let mut parallel_target = Vec::with_capacity(spec.parallel);
    while parallel_source.len() < spec.parallel {
        let label = rng.gen_range(0..2u8);
        for sentence in gen.review(label, &mut rng) {
            if parallel_source.len() == spec.parallel {
                break;
            }
            let target: Vec<String> = sentence
                .iter()
                .map(|&w| {
                    let image = gen.cipher[w];
                    if spec.noise > 0.0 && noise_rng.gen_bool(spec.noise) {
                        // uniform over the other target words
                        let mut other = noise_rng.gen_range(0..spec.vocab_size - 1);
                        if other >= image {
                            other += 1;
                        }
                        target_token(other)
                    } else {
                        target_token(image)
                    }
                })
                .collect();
            parallel_source.push(sentence.iter().map(|&w| source_token(w)).collect::<Vec<_>>().join(" "));
            parallel_target.push(target.join(" "));
        }
    }

    let truth = TruthMap {
        entries: (0..spec.vocab_size)
            .map(|w| TruthEntry {
                source: source_token(w),
                target: target_token(gen.cipher[w]),
                polarity: gen.lex.polarity(w),
            })
            .collect(),
    };
    Ok(SynthCorpus {
        labeled,
        source_test,
        target_test,
        parallel_source,
        parallel_target,
        truth,
    })
}

#[cfg(test)]
mod tests;
