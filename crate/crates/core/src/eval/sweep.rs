use std::fmt::Write as _;

use crate::error::{config_err, Result};
use crate::model::ModelConfig;
use crate::transfer::{Regime, TransferConfig};

use super::pipeline::{run_pipeline, PreparedData};

pub const SWEEP_CSV_HEADER: &str = "embed_dim,encode_dim,runs,mean_acc,std_acc";

/// Target-test accuracies of one grid cell, or the error that stopped it.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub embed_dim: usize,
    pub encode_dim: usize,
    pub runs: usize,
    pub accuracies: Vec<f64>,
    pub failure: Option<String>,
}

impl SweepCell {
    pub fn mean(&self) -> Option<f64> {
        if self.failure.is_some() || self.accuracies.is_empty() {
            return None;
        }
        Some(self.accuracies.iter().sum::<f64>() / self.accuracies.len() as f64)
    }

    /// Sample standard deviation; 0 for a single run.
    pub fn std(&self) -> Option<f64> {
        let mean = self.mean()?;
        let n = self.accuracies.len();
        if n < 2 {
            return Some(0.0);
        }
        let ss: f64 = self.accuracies.iter().map(|a| (a - mean).powi(2)).sum();
        Some((ss / (n - 1) as f64).sqrt())
    }
}

/// Trains and evaluates every (embedding, encoder) size `runs` times with
/// seeds `seed, seed + 1, ...`. A failing cell is recorded and the sweep goes on.
pub fn size_sweep(
    data: &PreparedData,
    base_model: &ModelConfig,
    base: &TransferConfig,
    regime: Regime,
    embed_dims: &[usize],
    encode_dims: &[usize],
    runs: usize,
) -> Result<Vec<SweepCell>> {
    if runs == 0 {
        return Err(config_err!("runs must be at least 1"));
    }
    if embed_dims.is_empty() || encode_dims.is_empty() {
        return Err(config_err!("sweep grid is empty"));
    }
    let mut cells = Vec::with_capacity(embed_dims.len() * encode_dims.len());
    for &embed_dim in embed_dims {
        for &encode_dim in encode_dims {
            let model = ModelConfig {
                embed_dim,
                sentence_hidden: encode_dim,
                review_hidden: encode_dim,
                ..base_model.clone()
            };
            let mut cell = SweepCell {
                embed_dim,
                encode_dim,
                runs,
                accuracies: Vec::with_capacity(runs),
                failure: None,
            };
            for r in 0..runs {
                let config = TransferConfig {
                    seed: base.seed + r as u64,
                    ..base.clone()
                };
                match run_pipeline::<f32>(data, &model, &config, regime) {
                    Ok(result) => cell.accuracies.push(result.target.accuracy),
                    Err(e) => {
                        cell.failure = Some(e.to_string());
                        break;
                    }
                }
            }
            cells.push(cell);
        }
    }
    Ok(cells)
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for c in cells {
        match (c.mean(), c.std()) {
            (Some(m), Some(s)) => writeln!(out, "{},{},{},{m},{s}", c.embed_dim, c.encode_dim, c.runs),
            _ => writeln!(out, "{},{},{},failed,failed", c.embed_dim, c.encode_dim, c.runs),
        }
        .expect("writing to a string");
    }
    out
}
