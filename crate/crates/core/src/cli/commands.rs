use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{data_err, Error, Result};
use crate::eval::pipeline::{build_vocabs, init_model};
use crate::eval::{
    evaluate as evaluate_view, evaluate_with_scores, interpolate as mix, neighbors as nearest, read_scores, size_sweep,
    sweep_csv, write_scores, EvalReport, PreparedData, TableRef,
};
use crate::model::checkpoint::{load_checkpoint, save_checkpoint};
use crate::model::Model;
use crate::synth::{generate, SynthSpec};
use crate::textpipe::io::{read_labeled, read_parallel, read_vocab, write_vocab};
use crate::textpipe::LabeledDoc;
use crate::transfer::{build_paragraphs, encode_docs, train as run_training, Regime};

use super::config::RunConfig;
use super::manifest::Manifest;

/// Created only once a command has its results, so failures leave no trace.
fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn human_report(name: &str, r: &EvalReport) -> String {
    format!(
        "{name}: accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  (tp {} fp {} tn {} fn {})",
        r.accuracy, r.precision, r.recall, r.f1, r.tp, r.fp, r.tn, r.fn_
    )
}

fn read_docs(cfg: &RunConfig, key: &str, manifest: &mut Manifest) -> Result<Vec<LabeledDoc>> {
    let path = cfg.require(key)?;
    manifest.input(key, path)?;
    Ok(read_labeled(path)?.docs)
}

/// Reads the training inputs named by `cfg`, building vocabularies unless
/// both vocabulary files are given. Test sets are loaded only on request.
fn load_data(cfg: &RunConfig, manifest: &mut Manifest, with_tests: bool) -> Result<PreparedData> {
    let langs = cfg.langs();
    let labeled = read_docs(cfg, "labeled", manifest)?;
    let (ps, pt) = (cfg.require("parallel_source")?, cfg.require("parallel_target")?);
    manifest.input("parallel_source", ps)?;
    manifest.input("parallel_target", pt)?;
    let (parallel_source, parallel_target) = read_parallel(ps, pt)?;
    let (source_vocab, target_vocab) = match (&cfg.source_vocab, &cfg.target_vocab) {
        (Some(sv), Some(tv)) => {
            manifest.input("source_vocab", sv)?;
            manifest.input("target_vocab", tv)?;
            (read_vocab(sv, &langs.source)?, read_vocab(tv, &langs.target)?)
        }
        (None, None) => build_vocabs(
            &langs,
            &labeled,
            &parallel_source,
            &parallel_target,
            cfg.min_count,
            cfg.max_vocab,
        )?,
        _ => {
            return Err(crate::error::config_err!(
                "give both source_vocab and target_vocab or neither"
            ))
        }
    };
    let (source_test, target_test) = if with_tests {
        (
            read_docs(cfg, "source_test", manifest)?,
            read_docs(cfg, "target_test", manifest)?,
        )
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(PreparedData {
        langs,
        source_vocab,
        target_vocab,
        labeled,
        source_test,
        target_test,
        parallel_source,
        parallel_target,
    })
}

pub fn gen_synth(spec: &SynthSpec, out: &Path) -> Result<()> {
    spec.validate()?;
    let corpus = generate(spec)?;
    create_out(out)?;
    let files = corpus.write(out, spec)?;
    let mut manifest = Manifest::new("gen-synth", spec);
    manifest.seed = Some(spec.seed);
    for path in files.all() {
        manifest.output(path)?;
        println!("{}", path.display());
    }
    manifest.write(out)
}

pub fn build_vocab(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let mut manifest = Manifest::new("build-vocab", cfg);
    let data = load_data(cfg, &mut manifest, false)?;
    create_out(out)?;
    for vocab in [&data.source_vocab, &data.target_vocab] {
        let path = out.join(format!("vocab.{}.txt", vocab.lang()));
        write_vocab(&path, vocab)?;
        manifest.output(&path)?;
        println!("{}\t{} entries", path.display(), vocab.len());
    }
    manifest.write(out)
}

pub fn train(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let mut manifest = Manifest::new("train", cfg);
    manifest.seed = Some(cfg.seed);
    let with_tests = cfg.source_test.is_some() || cfg.target_test.is_some();
    let data = load_data(cfg, &mut manifest, with_tests)?;
    let (model_config, transfer) = (cfg.model(), cfg.transfer());
    let labeled = encode_docs(&data.labeled, &data.source_vocab, &model_config)?;
    let paragraphs = build_paragraphs(
        &data.parallel_source,
        &data.parallel_target,
        &data.source_vocab,
        &data.target_vocab,
        &model_config,
        cfg.seed,
    )?;
    let mut model: Model<f32> = init_model(&model_config, &data.source_vocab, &data.target_vocab, cfg.seed)?;
    let outcome = run_training(cfg.regime, &mut model, &labeled, &paragraphs, &data.langs, &transfer)?;

    create_out(out)?;
    let checkpoint = out.join("model.ckpt");
    save_checkpoint(&model, &checkpoint)?;
    manifest.output(&checkpoint)?;
    if let Some(stage1) = &outcome.stage1 {
        let path = out.join("stage1.ckpt");
        save_checkpoint(stage1, &path)?;
        manifest.output(&path)?;
    }
    let losses = out.join("losses.csv");
    outcome.log.write_csv(&losses)?;
    manifest.output(&losses)?;
    if cfg.regime == Regime::TwoStage {
        manifest.result("freeze_epoch", outcome.log.freeze_epoch);
    }

    println!("epoch\tlabeled\tprojection\ttotal");
    for r in outcome.log.epoch_means() {
        println!(
            "{}\t{:.5}\t{:.5}\t{:.5}",
            r.epoch, r.labeled_loss, r.projection_loss, r.total
        );
    }
    for (name, docs, vocab, lang) in [
        ("source", &data.source_test, &data.source_vocab, &data.langs.source),
        ("target", &data.target_test, &data.target_vocab, &data.langs.target),
    ] {
        if docs.is_empty() {
            continue;
        }
        let report = evaluate_view(&model.view(lang)?, &encode_docs(docs, vocab, &model_config)?)?;
        println!("{}", human_report(name, &report));
        manifest.result(&format!("{name}_accuracy"), report.accuracy);
    }
    manifest.write(out)
}

pub fn evaluate(checkpoint: &Path, test: &Path, lang: &str, out: &Path) -> Result<()> {
    let model = load_checkpoint(checkpoint)?;
    let view = model.view(lang)?;
    let docs = read_labeled(test)?.docs;
    let encoded = encode_docs(&docs, view.vocab(), model.config())?;
    let (report, probs) = evaluate_with_scores(&view, &encoded)?;
    create_out(out)?;

    let mut manifest = Manifest::new("evaluate", &serde_json::json!({ "lang": lang }));
    manifest.input("checkpoint", checkpoint)?;
    manifest.input("test", test)?;
    let report_path = out.join("report.csv");
    write_text(&report_path, &report.to_csv())?;
    manifest.output(&report_path)?;
    let scores_path = out.join("scores.jsonl");
    write_scores(&scores_path, &probs.iter().map(|&p| p as f64).collect::<Vec<_>>())?;
    manifest.output(&scores_path)?;
    manifest.result("accuracy", report.accuracy);
    manifest.result("f1", report.f1);
    println!("{}", human_report(lang, &report));
    manifest.write(out)
}

pub fn neighbors(
    checkpoint: &Path,
    source: &str,
    target: &str,
    queries: &[String],
    k: usize,
    out: &Path,
) -> Result<()> {
    let model = load_checkpoint(checkpoint)?;
    let (src, tgt) = (TableRef::of(&model, source)?, TableRef::of(&model, target)?);
    let mut text = String::from("query\trank\ttoken\tscore\n");
    for query in queries {
        let list = nearest(query, src, tgt, k)?;
        for (rank, n) in list.neighbors.iter().enumerate() {
            let _ = writeln!(text, "{}\t{}\t{}\t{:.6}", list.query, rank + 1, n.token, n.score);
        }
    }
    print!("{text}");
    create_out(out)?;
    let mut manifest = Manifest::new(
        "neighbors",
        &serde_json::json!({ "source_lang": source, "target_lang": target, "k": k, "queries": queries }),
    );
    manifest.input("checkpoint", checkpoint)?;
    let path = out.join("neighbors.tsv");
    write_text(&path, &text)?;
    manifest.output(&path)?;
    manifest.write(out)
}

pub struct InterpolateInputs {
    pub dev_a: PathBuf,
    pub dev_b: PathBuf,
    pub dev_labels: PathBuf,
    pub test_a: PathBuf,
    pub test_b: PathBuf,
    pub test_labels: Option<PathBuf>,
}

fn labels_of(path: &Path) -> Result<Vec<u8>> {
    Ok(read_labeled(path)?.docs.iter().map(|d| d.label).collect())
}

pub fn interpolate(inputs: &InterpolateInputs, out: &Path) -> Result<()> {
    let mut manifest = Manifest::new("interpolate", &serde_json::json!({}));
    for (role, path) in [
        ("dev_a", &inputs.dev_a),
        ("dev_b", &inputs.dev_b),
        ("dev_labels", &inputs.dev_labels),
        ("test_a", &inputs.test_a),
        ("test_b", &inputs.test_b),
    ] {
        manifest.input(role, path)?;
    }
    let result = mix(
        &read_scores(&inputs.dev_a)?,
        &read_scores(&inputs.dev_b)?,
        &labels_of(&inputs.dev_labels)?,
        &read_scores(&inputs.test_a)?,
        &read_scores(&inputs.test_b)?,
    )?;
    create_out(out)?;
    let header = format!(
        "# lambda* = {:.2}  dev_accuracy = {:.4}",
        result.lambda, result.dev_accuracy
    );
    println!("{header}");
    let mut table = format!("{header}\nid\tp_positive\tprediction\n");
    for (id, (p, y)) in result.combined.iter().zip(&result.predictions).enumerate() {
        let _ = writeln!(table, "{id}\t{p:.6}\t{y}");
    }
    let table_path = out.join("interpolated.tsv");
    write_text(&table_path, &table)?;
    manifest.output(&table_path)?;
    let scores_path = out.join("interpolated.jsonl");
    write_scores(&scores_path, &result.combined)?;
    manifest.output(&scores_path)?;
    manifest.result("lambda", result.lambda);
    manifest.result("dev_accuracy", result.dev_accuracy);
    if let Some(path) = &inputs.test_labels {
        manifest.input("test_labels", path)?;
        let labels = labels_of(path)?;
        if labels.len() != result.predictions.len() {
            return Err(data_err!(
                "{} labels for {} test scores",
                labels.len(),
                result.predictions.len()
            ));
        }
        let report = EvalReport::from_predictions(&result.predictions, &labels)?;
        println!("{}", human_report("test", &report));
        manifest.result("test_accuracy", report.accuracy);
    }
    manifest.write(out)
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let mut manifest = Manifest::new("sweep", cfg);
    manifest.seed = Some(cfg.seed);
    let data = load_data(cfg, &mut manifest, true)?;
    let cells = size_sweep(
        &data,
        &cfg.model(),
        &cfg.transfer(),
        cfg.regime,
        &cfg.embed_dims,
        &cfg.encode_dims,
        cfg.runs,
    )?;
    let csv = sweep_csv(&cells);
    create_out(out)?;
    print!("{csv}");
    for cell in &cells {
        if let Some(reason) = &cell.failure {
            eprintln!("cell {}x{} failed: {reason}", cell.embed_dim, cell.encode_dim);
        }
    }
    let path = out.join("sweep.csv");
    write_text(&path, &csv)?;
    manifest.output(&path)?;
    manifest.write(out)
}
