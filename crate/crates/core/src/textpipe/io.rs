//! Readers and writers for the on-disk corpus formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{data_err, Error, Result};

use super::encode::binarize_rating;
use super::tokenize::tokenize;
use super::vocab::Vocabulary;

/// One line of a labelled JSON-lines file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReviewRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stars: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    pub sentences: Vec<String>,
}

/// A labelled review after binarisation and tokenisation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDoc {
    pub label: u8,
    pub sentences: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub docs: Vec<LabeledDoc>,
    /// Three-star reviews dropped during binarisation.
    pub skipped: usize,
}

impl ReviewRecord {
    /// Resolves the binary label; `None` for an excluded three-star review.
    pub fn resolve_label(&self) -> Result<Option<u8>> {
        match (self.stars, self.label) {
            (Some(_), Some(_)) => Err(data_err!("record has both stars and label")),
            (None, None) => Err(data_err!("record has neither stars nor label")),
            (Some(stars), None) => binarize_rating(stars),
            (None, Some(l @ (0 | 1))) => Ok(Some(l)),
            (None, Some(l)) => Err(data_err!("label must be 0 or 1, got {l}")),
        }
    }

    /// Tokenised document, or `None` for an excluded three-star review.
    pub fn to_doc(&self) -> Result<Option<LabeledDoc>> {
        Ok(self.resolve_label()?.map(|label| LabeledDoc {
            label,
            sentences: self.sentences.iter().map(|s| tokenize(s)).collect(),
        }))
    }
}

impl LabeledCorpus {
    pub fn from_records(records: &[ReviewRecord]) -> Result<Self> {
        let mut corpus = Self::default();
        for (n, record) in records.iter().enumerate() {
            match record.to_doc().map_err(|e| data_err!("record {}: {e}", n + 1))? {
                Some(doc) => corpus.docs.push(doc),
                None => corpus.skipped += 1,
            }
        }
        Ok(corpus)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

pub fn parse_labeled<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<LabeledCorpus> {
    let mut corpus = LabeledCorpus::default();
    for (n, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ReviewRecord = serde_json::from_str(line).map_err(|e| data_err!("line {}: {e}", n + 1))?;
        match record.to_doc().map_err(|e| data_err!("line {}: {e}", n + 1))? {
            Some(doc) => corpus.docs.push(doc),
            None => corpus.skipped += 1,
        }
    }
    Ok(corpus)
}

pub fn read_labeled(path: &Path) -> Result<LabeledCorpus> {
    let lines = lines(path)?;
    parse_labeled(lines.iter().map(String::as_str)).map_err(|e| match e {
        Error::Data(msg) => data_err!("{}: {msg}", path.display()),
        other => other,
    })
}

pub fn write_labeled(path: &Path, records: &[ReviewRecord]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        let line = serde_json::to_string(r).expect("review record serialises");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads two line-aligned files and tokenises each line.
pub fn read_parallel(source: &Path, target: &Path) -> Result<(Vec<Vec<String>>, Vec<Vec<String>>)> {
    let a = lines(source)?;
    let b = lines(target)?;
    if a.len() != b.len() {
        return Err(data_err!(
            "{} has {} lines but {} has {}",
            source.display(),
            a.len(),
            target.display(),
            b.len()
        ));
    }
    Ok((
        a.iter().map(|l| tokenize(l)).collect(),
        b.iter().map(|l| tokenize(l)).collect(),
    ))
}

pub fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<()> {
    let mut w = create(path)?;
    for l in lines {
        writeln!(w, "{}", l.as_ref()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Vocabulary file: one token per line, line `i` holds id `i + 2`.
pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_lines(path, vocab.tokens())
}

pub fn read_vocab(path: &Path, lang: &str) -> Result<Vocabulary> {
    let tokens = lines(path)?;
    Vocabulary::from_tokens(lang, tokens).map_err(|e| match e {
        Error::Data(msg) => data_err!("{}: {msg}", path.display()),
        other => other,
    })
}

/// Counts describing a loaded corpus.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub review_count: usize,
    pub parallel_count: usize,
    pub source_vocab_size: usize,
    pub target_vocab_size: usize,
    pub positive_fraction: f64,
}

impl CorpusStats {
    pub fn collect(
        labeled: &LabeledCorpus,
        parallel_count: usize,
        source_vocab: &Vocabulary,
        target_vocab: &Vocabulary,
    ) -> Self {
        let positives = labeled.docs.iter().filter(|d| d.label == 1).count();
        Self {
            review_count: labeled.docs.len(),
            parallel_count,
            source_vocab_size: source_vocab.len(),
            target_vocab_size: target_vocab.len(),
            positive_fraction: if labeled.docs.is_empty() {
                0.0
            } else {
                positives as f64 / labeled.docs.len() as f64
            },
        }
    }
}
