//! End-to-end runs: vocabularies, encoding, training and evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{Model, ModelConfig};
use crate::numcore::Scalar;
use crate::synth::{SynthCorpus, SynthSpec};
use crate::textpipe::{build_vocab, LabeledCorpus, LabeledDoc, Vocabulary};
use crate::transfer::{
    build_paragraphs, derive_seed, encode_docs, train, LanguagePair, Regime, TrainLog, TransferConfig,
};

use super::metrics::{evaluate, EvalReport};

pub const DEFAULT_MIN_COUNT: usize = 2;
pub const DEFAULT_MAX_VOCAB: usize = 50_000;
const STREAM_MODEL_INIT: u64 = 8;

/// Tokenised datasets and vocabularies for one language pair.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub langs: LanguagePair,
    pub source_vocab: Vocabulary,
    pub target_vocab: Vocabulary,
    pub labeled: Vec<LabeledDoc>,
    pub source_test: Vec<LabeledDoc>,
    pub target_test: Vec<LabeledDoc>,
    pub parallel_source: Vec<Vec<String>>,
    pub parallel_target: Vec<Vec<String>>,
}

/// Source vocabulary from the labelled and parallel source text, target
/// vocabulary from the parallel target text.
pub fn build_vocabs(
    langs: &LanguagePair,
    labeled: &[LabeledDoc],
    parallel_source: &[Vec<String>],
    parallel_target: &[Vec<String>],
    min_count: usize,
    max_size: usize,
) -> Result<(Vocabulary, Vocabulary)> {
    let source_text = labeled
        .iter()
        .flat_map(|d| d.sentences.iter())
        .chain(parallel_source)
        .map(Vec::as_slice);
    let source = build_vocab(&langs.source, source_text, min_count, max_size)?;
    let target = build_vocab(
        &langs.target,
        parallel_target.iter().map(Vec::as_slice),
        min_count,
        max_size,
    )?;
    Ok((source, target))
}

impl PreparedData {
    pub fn from_synth(corpus: &SynthCorpus, spec: &SynthSpec) -> Result<Self> {
        let langs = LanguagePair::new(&spec.source_lang, &spec.target_lang);
        let tokenized =
            |lines: &[String]| -> Vec<Vec<String>> { lines.iter().map(|l| crate::textpipe::tokenize(l)).collect() };
        let labeled = LabeledCorpus::from_records(&corpus.labeled)?.docs;
        let parallel_source = tokenized(&corpus.parallel_source);
        let parallel_target = tokenized(&corpus.parallel_target);
        let (source_vocab, target_vocab) = build_vocabs(
            &langs,
            &labeled,
            &parallel_source,
            &parallel_target,
            DEFAULT_MIN_COUNT,
            DEFAULT_MAX_VOCAB,
        )?;
        Ok(Self {
            langs,
            source_vocab,
            target_vocab,
            labeled,
            source_test: LabeledCorpus::from_records(&corpus.source_test)?.docs,
            target_test: LabeledCorpus::from_records(&corpus.target_test)?.docs,
            parallel_source,
            parallel_target,
        })
    }
}

/// Trained model, its loss log and test-set reports.
#[derive(Clone, Debug)]
pub struct PipelineResult<T> {
    pub model: Model<T>,
    pub stage1: Option<Model<T>>,
    pub log: TrainLog,
    pub source: EvalReport,
    pub target: EvalReport,
}

/// Fresh model for the pair, initialised from a stream derived from `seed`.
pub fn init_model<T: Scalar>(
    config: &ModelConfig,
    source: &Vocabulary,
    target: &Vocabulary,
    seed: u64,
) -> Result<Model<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_MODEL_INIT, 0));
    Model::new(config.clone(), vec![source.clone(), target.clone()], &mut rng)
}

pub fn run_pipeline<T: Scalar>(
    data: &PreparedData,
    model_config: &ModelConfig,
    config: &TransferConfig,
    regime: Regime,
) -> Result<PipelineResult<T>> {
    model_config.validate()?;
    config.validate()?;
    let labeled = encode_docs(&data.labeled, &data.source_vocab, model_config)?;
    let paragraphs = build_paragraphs(
        &data.parallel_source,
        &data.parallel_target,
        &data.source_vocab,
        &data.target_vocab,
        model_config,
        config.seed,
    )?;
    let mut model = init_model(model_config, &data.source_vocab, &data.target_vocab, config.seed)?;
    let outcome = train(regime, &mut model, &labeled, &paragraphs, &data.langs, config)?;
    let source_test = encode_docs(&data.source_test, &data.source_vocab, model_config)?;
    let target_test = encode_docs(&data.target_test, &data.target_vocab, model_config)?;
    let source = evaluate(&model.view(&data.langs.source)?, &source_test)?;
    let target = evaluate(&model.view(&data.langs.target)?, &target_test)?;
    Ok(PipelineResult {
        model,
        stage1: outcome.stage1,
        log: outcome.log,
        source,
        target,
    })
}
