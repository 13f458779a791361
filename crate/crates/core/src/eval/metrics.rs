use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{data_err, dim_err, Result};
use crate::model::ModelView;
use crate::numcore::Scalar;
use crate::textpipe::{EncodedReview, Grid};

/// Confusion counts and the metrics derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall (0 when both are 0).
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub const REPORT_CSV_HEADER: &str = "tp,fp,tn,fn,precision,recall,f1,accuracy";

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Result<Self> {
        let total = tp + fp + tn + fn_;
        if total == 0 {
            return Err(data_err!("cannot evaluate an empty test set"));
        }
        // F1 straight from counts: 2tp / (2tp + fp + fn)
        Ok(Self {
            tp,
            fp,
            tn,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            accuracy: ratio(tp + tn, total),
        })
    }

    pub fn from_predictions(predictions: &[u8], labels: &[u8]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(dim_err!(
                "{} predictions for {} labels",
                predictions.len(),
                labels.len()
            ));
        }
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p, y) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 0) => tn += 1,
                (0, 1) => fn_ += 1,
                _ => return Err(data_err!("labels and predictions must be 0 or 1")),
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        let _ = writeln!(
            out,
            "\n{},{},{},{},{},{},{},{}",
            self.tp, self.fp, self.tn, self.fn_, self.precision, self.recall, self.f1, self.accuracy
        );
        out
    }
}

/// Positive when the probability exceeds one half.
pub fn decide<T: Scalar>(p: T) -> u8 {
    u8::from(p > T::lit(0.5))
}

/// Scores a model view on labelled grids; also returns the probabilities.
pub fn evaluate_with_scores<T: Scalar>(
    view: &ModelView<'_, T>,
    test: &[EncodedReview],
) -> Result<(EvalReport, Vec<T>)> {
    if test.is_empty() {
        return Err(data_err!("cannot evaluate an empty test set"));
    }
    let grids: Vec<Grid> = test.iter().map(|r| r.grid.clone()).collect();
    let probs = view.predict_proba(&grids)?;
    let preds: Vec<u8> = probs.iter().map(|&p| decide(p)).collect();
    let labels: Vec<u8> = test.iter().map(|r| r.label).collect();
    Ok((EvalReport::from_predictions(&preds, &labels)?, probs))
}

pub fn evaluate<T: Scalar>(view: &ModelView<'_, T>, test: &[EncodedReview]) -> Result<EvalReport> {
    evaluate_with_scores(view, test).map(|(r, _)| r)
}
