use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{data_err, Error, Result};

/// One line of an external score file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub id: u64,
    pub p_positive: f64,
}

/// Reads a score file and returns probabilities ordered by id. Ids must be
/// exactly `0..n`.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ScoreRecord =
            serde_json::from_str(&line).map_err(|e| data_err!("{}: line {}: {e}", path.display(), n + 1))?;
        if !(0.0..=1.0).contains(&r.p_positive) {
            return Err(data_err!(
                "{}: line {}: p_positive outside [0, 1]",
                path.display(),
                n + 1
            ));
        }
        records.push(r);
    }
    records.sort_by_key(|r| r.id);
    for (i, r) in records.iter().enumerate() {
        if r.id != i as u64 {
            return Err(data_err!(
                "{}: ids must be 0..{} without gaps or repeats",
                path.display(),
                records.len()
            ));
        }
    }
    Ok(records.into_iter().map(|r| r.p_positive).collect())
}

pub fn write_scores(path: &Path, probs: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (id, &p_positive) in probs.iter().enumerate() {
        let line = serde_json::to_string(&ScoreRecord {
            id: id as u64,
            p_positive,
        })
        .expect("score serialises");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_reorder() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        write_scores(&p, &[0.25, 0.5, 1.0]).unwrap();
        assert_eq!(read_scores(&p).unwrap(), vec![0.25, 0.5, 1.0]);
        std::fs::write(&p, "{\"id\":1,\"p_positive\":0.9}\n{\"id\":0,\"p_positive\":0.1}\n").unwrap();
        assert_eq!(read_scores(&p).unwrap(), vec![0.1, 0.9]);
    }

    #[test]
    fn gaps_and_bad_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        std::fs::write(&p, "{\"id\":1,\"p_positive\":0.9}\n").unwrap();
        assert!(matches!(read_scores(&p), Err(Error::Data(_))));
        std::fs::write(&p, "{\"id\":0,\"p_positive\":1.5}\n").unwrap();
        assert!(matches!(read_scores(&p), Err(Error::Data(_))));
    }
}
