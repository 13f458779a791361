use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{config_err, Error, Result};
use crate::model::Model;
use crate::numcore::{Gradients, Graph, RmsProp, Scalar};
use crate::textpipe::{EncodedReview, ParallelParagraph};

use super::losses::{label_projection_loss_node, labeled_loss_node, projection_loss_node};
use super::{Regime, SupervisionMode, TransferConfig};

/// Source and target language tags of a transfer run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguagePair {
    pub source: String,
    pub target: String,
}

impl LanguagePair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
        }
    }
}

/// Loss values of one optimisation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub epoch: usize,
    pub step: usize,
    pub labeled_loss: f64,
    pub projection_loss: f64,
    /// `labeled_loss + alpha * projection_loss`
    pub total: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LossBreakdown>,
    /// Last epoch before parameters were frozen (two-stage only).
    pub freeze_epoch: Option<usize>,
}

pub const LOSS_CSV_HEADER: &str = "epoch,step,labeled_loss,projection_loss,total";

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LOSS_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch, r.step, r.labeled_loss, r.projection_loss, r.total
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Mean of each column per epoch, in epoch order.
    pub fn epoch_means(&self) -> Vec<LossBreakdown> {
        let mut out: Vec<(LossBreakdown, usize)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some((acc, n)) if acc.epoch == r.epoch => {
                    acc.labeled_loss += r.labeled_loss;
                    acc.projection_loss += r.projection_loss;
                    acc.total += r.total;
                    acc.step = r.step;
                    *n += 1;
                }
                _ => out.push((*r, 1)),
            }
        }
        out.into_iter()
            .map(|(mut r, n)| {
                let n = n as f64;
                r.labeled_loss /= n;
                r.projection_loss /= n;
                r.total /= n;
                r
            })
            .collect()
    }
}

/// Result of a training run.
#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub log: TrainLog,
    /// Model as it stood when the first stage finished (two-stage only).
    pub stage1: Option<Model<T>>,
}

const STREAM_LABELED: u64 = 1;
const STREAM_PARALLEL: u64 = 2;
const STREAM_LABELED_DROPOUT: u64 = 3;
const STREAM_PARALLEL_DROPOUT: u64 = 4;

/// Mixes a run seed with a stream tag and index (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn shuffled(len: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap()
}

/// Endless stream of parallel batches, reshuffled at every pass.
struct ParallelCycle {
    order: Vec<usize>,
    pos: usize,
    pass: u64,
    seed: u64,
}

impl ParallelCycle {
    fn new(len: usize, seed: u64) -> Self {
        Self {
            order: shuffled(len, derive_seed(seed, STREAM_PARALLEL, 0)),
            pos: 0,
            pass: 0,
            seed,
        }
    }

    fn next(&mut self, batch: usize) -> &[usize] {
        if self.pos >= self.order.len() {
            self.pass += 1;
            self.order = shuffled(self.order.len(), derive_seed(self.seed, STREAM_PARALLEL, self.pass));
            self.pos = 0;
        }
        let start = self.pos;
        self.pos = (start + batch).min(self.order.len());
        &self.order[start..self.pos]
    }
}

struct Run<'a, T> {
    model: &'a mut Model<T>,
    langs: &'a LanguagePair,
    config: &'a TransferConfig,
    optimizer: RmsProp,
    labeled_dropout: ChaCha8Rng,
    parallel_dropout: ChaCha8Rng,
    log: TrainLog,
    step: usize,
}

impl<'a, T: Scalar> Run<'a, T> {
    fn new(model: &'a mut Model<T>, langs: &'a LanguagePair, config: &'a TransferConfig) -> Result<Self> {
        config.validate()?;
        model.language(&langs.source)?;
        model.language(&langs.target)?;
        Ok(Self {
            model,
            langs,
            config,
            optimizer: config.optimizer(),
            labeled_dropout: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_LABELED_DROPOUT, 0)),
            parallel_dropout: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_PARALLEL_DROPOUT, 0)),
            log: TrainLog::default(),
            step: 0,
        })
    }

    fn labeled_grads(&mut self, batch: &[&EncodedReview]) -> Result<(f64, Gradients<T>)> {
        let view = self.model.view(&self.langs.source)?;
        let mut g = Graph::new(self.model.store());
        let loss = labeled_loss_node(&mut g, &view, batch, true, &mut self.labeled_dropout)?;
        Ok((to_f64(g.value(loss).item()), g.backward(loss)?))
    }

    fn parallel_grads(&mut self, batch: &[&ParallelParagraph]) -> Result<(f64, Gradients<T>)> {
        let (src, tgt) = (&self.langs.source, &self.langs.target);
        let mut g = Graph::new(self.model.store());
        let loss = match self.config.supervision {
            SupervisionMode::Representation => {
                projection_loss_node(&mut g, self.model, src, tgt, batch, true, &mut self.parallel_dropout)?
            }
            SupervisionMode::Label => {
                label_projection_loss_node(&mut g, self.model, src, tgt, batch, true, &mut self.parallel_dropout)?
            }
        };
        Ok((to_f64(g.value(loss).item()), g.backward(loss)?))
    }

    fn apply(&mut self, grads: &[(&Gradients<T>, f64)]) -> Result<()> {
        let store = self.model.store_mut();
        store.zero_grad();
        // a zero weight contributes nothing, not even signed zeros
        for (g, scale) in grads.iter().filter(|(_, s)| *s != 0.0) {
            store.accumulate(g, T::lit(*scale))?;
        }
        self.optimizer.step(store)
    }

    fn record(&mut self, epoch: usize, labeled: f64, projection: f64, weight: f64) {
        self.step += 1;
        self.log.rows.push(LossBreakdown {
            epoch,
            step: self.step,
            labeled_loss: labeled,
            projection_loss: projection,
            total: labeled + weight * projection,
        });
    }

    fn labeled_order(&self, len: usize, epoch: usize) -> Vec<usize> {
        shuffled(len, derive_seed(self.config.seed, STREAM_LABELED, epoch as u64))
    }

    fn labeled_epoch(&mut self, labeled: &[EncodedReview], epoch: usize) -> Result<()> {
        let order = self.labeled_order(labeled.len(), epoch);
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&EncodedReview> = chunk.iter().map(|&i| &labeled[i]).collect();
            let (loss, grads) = self.labeled_grads(&batch)?;
            self.apply(&[(&grads, 1.0)])?;
            self.record(epoch, loss, 0.0, 0.0);
        }
        Ok(())
    }

    fn projection_epoch(&mut self, parallel: &[ParallelParagraph], epoch: usize) -> Result<()> {
        let order = shuffled(
            parallel.len(),
            derive_seed(self.config.seed, STREAM_PARALLEL, 1_000_000 + epoch as u64),
        );
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&ParallelParagraph> = chunk.iter().map(|&i| &parallel[i]).collect();
            let (loss, grads) = self.parallel_grads(&batch)?;
            self.apply(&[(&grads, 1.0)])?;
            self.record(epoch, 0.0, loss, 1.0);
        }
        Ok(())
    }

    fn joint_epoch(
        &mut self,
        labeled: &[EncodedReview],
        parallel: &[ParallelParagraph],
        cycle: &mut ParallelCycle,
        epoch: usize,
    ) -> Result<()> {
        let order = self.labeled_order(labeled.len(), epoch);
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&EncodedReview> = chunk.iter().map(|&i| &labeled[i]).collect();
            let (l_loss, l_grads) = self.labeled_grads(&batch)?;
            let pbatch: Vec<&ParallelParagraph> = cycle
                .next(self.config.batch_size)
                .iter()
                .map(|&i| &parallel[i])
                .collect();
            let alpha = self.config.alpha;
            // with alpha = 0 the parallel term is not part of the objective
            if alpha == 0.0 {
                self.apply(&[(&l_grads, 1.0)])?;
                self.record(epoch, l_loss, 0.0, 0.0);
                continue;
            }
            let (p_loss, p_grads) = self.parallel_grads(&pbatch)?;
            self.apply(&[(&l_grads, 1.0), (&p_grads, alpha)])?;
            self.record(epoch, l_loss, p_loss, alpha);
        }
        Ok(())
    }
}

fn require_data(labeled: &[EncodedReview], parallel: Option<&[ParallelParagraph]>) -> Result<()> {
    if labeled.is_empty() {
        return Err(config_err!("labelled dataset is empty"));
    }
    if parallel.is_some_and(<[_]>::is_empty) {
        return Err(config_err!("parallel dataset is empty"));
    }
    Ok(())
}

/// Trains on labelled data for `labeled_epochs`, then freezes the source
/// embeddings, encoder and head and fits only the target embeddings on the
/// parallel data for `projection_epochs`.
pub fn train_two_stage<T: Scalar>(
    model: &mut Model<T>,
    labeled: &[EncodedReview],
    parallel: &[ParallelParagraph],
    langs: &LanguagePair,
    config: &TransferConfig,
) -> Result<TrainOutcome<T>> {
    require_data(labeled, Some(parallel))?;
    let mut run = Run::new(model, langs, config)?;
    for epoch in 1..=config.labeled_epochs {
        run.labeled_epoch(labeled, epoch)?;
    }
    let stage1 = run.model.clone();
    run.log.freeze_epoch = Some(config.labeled_epochs);

    let target_table = run.model.language(&langs.target)?.table;
    let store = run.model.store_mut();
    let previous: Vec<bool> = store.slots().iter().map(|s| s.frozen).collect();
    store.freeze_all(true);
    store.set_frozen(target_table, false);
    let result =
        (1..=config.projection_epochs).try_for_each(|e| run.projection_epoch(parallel, config.labeled_epochs + e));
    for (slot, frozen) in run.model.store_mut().slots_mut().iter_mut().zip(previous) {
        slot.frozen = frozen;
    }
    result?;
    Ok(TrainOutcome {
        log: run.log,
        stage1: Some(stage1),
    })
}

/// Labelled-only warm-up for `pretrain_epochs`, then `joint_epochs` where every
/// step pairs one labelled batch with one parallel batch and applies a single
/// update from `∇L_labeled + alpha·∇L_parallel`. All parameters stay trainable.
pub fn train_joint<T: Scalar>(
    model: &mut Model<T>,
    labeled: &[EncodedReview],
    parallel: &[ParallelParagraph],
    langs: &LanguagePair,
    config: &TransferConfig,
) -> Result<TrainOutcome<T>> {
    require_data(labeled, Some(parallel))?;
    let mut run = Run::new(model, langs, config)?;
    for epoch in 1..=config.pretrain_epochs {
        run.labeled_epoch(labeled, epoch)?;
    }
    let mut cycle = ParallelCycle::new(parallel.len(), config.seed);
    for e in 1..=config.joint_epochs {
        run.joint_epoch(labeled, parallel, &mut cycle, config.pretrain_epochs + e)?;
    }
    Ok(TrainOutcome {
        log: run.log,
        stage1: None,
    })
}

/// Labelled data only, for `pretrain_epochs + joint_epochs` epochs, with the
/// same batching and dropout streams as [`train_joint`].
pub fn train_labeled_only<T: Scalar>(
    model: &mut Model<T>,
    labeled: &[EncodedReview],
    langs: &LanguagePair,
    config: &TransferConfig,
) -> Result<TrainOutcome<T>> {
    require_data(labeled, None)?;
    let mut run = Run::new(model, langs, config)?;
    for epoch in 1..=config.pretrain_epochs + config.joint_epochs {
        run.labeled_epoch(labeled, epoch)?;
    }
    Ok(TrainOutcome {
        log: run.log,
        stage1: None,
    })
}

pub fn train<T: Scalar>(
    regime: Regime,
    model: &mut Model<T>,
    labeled: &[EncodedReview],
    parallel: &[ParallelParagraph],
    langs: &LanguagePair,
    config: &TransferConfig,
) -> Result<TrainOutcome<T>> {
    match regime {
        Regime::TwoStage => train_two_stage(model, labeled, parallel, langs, config),
        Regime::Joint => train_joint(model, labeled, parallel, langs, config),
        Regime::LabeledOnly => train_labeled_only(model, labeled, langs, config),
    }
}
