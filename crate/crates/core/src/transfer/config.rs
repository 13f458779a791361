use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::numcore::RmsProp;

/// What the target side is fitted to on parallel data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupervisionMode {
    /// Match the source-side task representation (mean squared error).
    Representation,
    /// Match the source model's hard predicted label (cross-entropy).
    Label,
}

/// Training procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    TwoStage,
    Joint,
    LabeledOnly,
}

macro_rules! str_enum {
    ($t:ty { $($v:ident => $s:literal),* $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)*
                    other => Err(config_err!("unknown {} {other:?}", stringify!($t))),
                }
            }
        }
    };
}

str_enum!(SupervisionMode { Representation => "representation", Label => "label" });
str_enum!(Regime { TwoStage => "two-stage", Joint => "joint", LabeledOnly => "labeled-only" });

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    /// Weight of the parallel-data loss in the joint objective.
    pub alpha: f64,
    /// Two-stage: epochs on labelled data before freezing.
    pub labeled_epochs: usize,
    /// Two-stage: epochs fitting target embeddings on parallel data.
    pub projection_epochs: usize,
    /// Joint: labelled-only warm-up epochs.
    pub pretrain_epochs: usize,
    /// Joint: epochs over the combined objective.
    pub joint_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub supervision: SupervisionMode,
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        let opt = RmsProp::default();
        Self {
            alpha: 1.0,
            labeled_epochs: 10,
            projection_epochs: 10,
            pretrain_epochs: 4,
            joint_epochs: 12,
            batch_size: 32,
            seed: 0,
            supervision: SupervisionMode::Representation,
            learning_rate: opt.lr,
            rms_decay: opt.decay,
            rms_eps: opt.eps,
        }
    }
}

impl TransferConfig {
    pub fn optimizer(&self) -> RmsProp {
        RmsProp {
            lr: self.learning_rate,
            decay: self.rms_decay,
            eps: self.rms_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(config_err!(
                "alpha must be a finite non-negative number, got {}",
                self.alpha
            ));
        }
        if self.batch_size < 1 {
            return Err(config_err!("batch_size must be at least 1"));
        }
        self.optimizer().validate()
    }
}
