use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{Model, ModelConfig};
use crate::numcore::Tensor;
use crate::textpipe::io::{read_labeled, read_parallel};
use crate::textpipe::{Vocabulary, RESERVED};
use crate::transfer::LanguagePair;

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        labeled: 200,
        parallel: 300,
        test: 50,
        seed,
        ..SynthSpec::default()
    }
}

#[test]
fn noiseless_parallel_is_exact_cipher() {
    let spec = small_spec(3);
    let c = generate(&spec).unwrap();
    assert_eq!(c.parallel_source.len(), spec.parallel);
    for (s, t) in c.parallel_source.iter().zip(&c.parallel_target) {
        let mapped: Vec<&str> = s
            .split(' ')
            .map(|w| c.truth.target_of(w).unwrap().target.as_str())
            .collect();
        assert_eq!(mapped.join(" "), *t);
    }
}

#[test]
fn same_seed_same_bytes() {
    let spec = small_spec(11);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = generate(&spec).unwrap().write(a.path(), &spec).unwrap();
    let fb = generate(&spec).unwrap().write(b.path(), &spec).unwrap();
    for (x, y) in fa.all().iter().zip(fb.all()) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let other = generate(&small_spec(12)).unwrap();
    assert_ne!(generate(&spec).unwrap().parallel_source, other.parallel_source);
}

#[test]
fn labels_balanced_for_default_size() {
    let spec = SynthSpec {
        parallel: 10,
        test: 10,
        ..SynthSpec::default()
    };
    let c = generate(&spec).unwrap();
    assert_eq!(c.labeled.len(), 2000);
    let positives = c.labeled.iter().filter(|r| r.label == Some(1)).count();
    assert!((positives as f64 / 2000.0 - 0.5).abs() <= 0.02);
}

#[test]
fn noise_fraction_within_three_sigma() {
    let spec = SynthSpec {
        noise: 0.1,
        parallel: 3000,
        labeled: 10,
        test: 10,
        ..SynthSpec::default()
    };
    let c = generate(&spec).unwrap();
    let (mut total, mut changed) = (0usize, 0usize);
    for (s, t) in c.parallel_source.iter().zip(&c.parallel_target) {
        let src: Vec<&str> = s.split(' ').collect();
        let tgt: Vec<&str> = t.split(' ').collect();
        assert_eq!(src.len(), tgt.len());
        for (a, b) in src.iter().zip(&tgt) {
            total += 1;
            if c.truth.target_of(a).unwrap().target != *b {
                changed += 1;
            }
        }
    }
    let r = spec.noise;
    let sigma = (r * (1.0 - r) / total as f64).sqrt();
    let observed = changed as f64 / total as f64;
    assert!(
        (observed - r).abs() <= 3.0 * sigma,
        "observed {observed}, sigma {sigma}"
    );
}

#[test]
fn invalid_specs_rejected() {
    for bad in [
        SynthSpec {
            noise: 1.0,
            ..SynthSpec::default()
        },
        SynthSpec {
            positive_words: 300,
            negative_words: 100,
            ..SynthSpec::default()
        },
        SynthSpec {
            min_words: 7,
            ..SynthSpec::default()
        },
        SynthSpec {
            target_lang: "src".into(),
            ..SynthSpec::default()
        },
    ] {
        assert!(matches!(generate(&bad), Err(Error::Config(_))));
    }
}

#[test]
fn files_round_trip_through_ingestion() {
    let spec = small_spec(5);
    let c = generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = c.write(dir.path(), &spec).unwrap();
    let labeled = read_labeled(&files.labeled).unwrap();
    assert_eq!(labeled.docs.len(), spec.labeled);
    assert_eq!(labeled.skipped, 0);
    assert_eq!(read_labeled(&files.target_test).unwrap().docs.len(), spec.test);
    let (s, t) = read_parallel(&files.parallel_source, &files.parallel_target).unwrap();
    assert_eq!((s.len(), t.len()), (spec.parallel, spec.parallel));
    let truth = TruthMap::from_tsv(&std::fs::read_to_string(&files.truth).unwrap()).unwrap();
    assert_eq!(truth, c.truth);
}

#[test]
fn target_test_is_cipher_language() {
    let c = generate(&small_spec(2)).unwrap();
    let targets = c.truth.polarity_of_target();
    for r in &c.target_test {
        for s in &r.sentences {
            assert!(s.split(' ').all(|w| targets.contains_key(w)));
        }
    }
}

fn truth_vocabs(truth: &TruthMap) -> (Vocabulary, Vocabulary) {
    let src = Vocabulary::from_tokens("src", truth.entries.iter().map(|e| e.source.clone())).unwrap();
    let tgt = Vocabulary::from_tokens("tgt", truth.entries.iter().map(|e| e.target.clone())).unwrap();
    (src, tgt)
}

fn langs() -> LanguagePair {
    LanguagePair::new("src", "tgt")
}

#[test]
fn identical_tables_recover_exactly() {
    let c = generate(&small_spec(4)).unwrap();
    let (sv, tv) = truth_vocabs(&c.truth);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut model = Model::<f64>::new(ModelConfig::desk(), vec![sv.clone(), tv.clone()], &mut rng).unwrap();
    let src_id = model.language("src").unwrap().table;
    let tgt_id = model.language("tgt").unwrap().table;
    let source = model.store().value(src_id).clone();
    let mut target = Tensor::zeros(source.shape());
    for e in &c.truth.entries {
        let from = sv.get(&e.source).unwrap() as usize;
        let to = tv.get(&e.target).unwrap() as usize;
        target.row_mut(to).copy_from_slice(source.row(from));
    }
    model.store_mut().slot_mut(tgt_id).value = target;
    let score = score_neighbor_recovery(&model, &langs(), &c.truth, 10, 20).unwrap();
    assert_eq!(score.words, 20);
    assert_eq!(score.exact_rate, 1.0);
}

#[test]
fn random_embeddings_match_chance() {
    let c = generate(&small_spec(6)).unwrap();
    let (sv, tv) = truth_vocabs(&c.truth);
    let mut rates = Vec::new();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Model::<f64>::new(ModelConfig::desk(), vec![sv.clone(), tv.clone()], &mut rng).unwrap();
        // k = 3 gives a chance rate well above zero
        let s = score_neighbor_recovery(&model, &langs(), &c.truth, 3, 80).unwrap();
        assert!((0.0..=1.0).contains(&s.agreement_rate) && (0.0..=1.0).contains(&s.exact_rate));
        assert!(
            (s.agreement_rate - s.chance_rate).abs() <= 3.0 * s.chance_std + 1e-12,
            "{s:?}"
        );
        rates.push(s);
    }
    assert!(rates[0].chance_rate > 0.0);
}

#[test]
fn chance_agreement_matches_enumeration() {
    // population 6, 3 matching, k = 3: P(X >= 2) = (C(3,2)C(3,1) + C(3,3)) / C(6,3) = 10/20
    assert!((chance_agreement(6, 3, 3).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(chance_agreement(5, 0, 3).unwrap(), 0.0);
    assert!((chance_agreement(5, 5, 3).unwrap() - 1.0).abs() < 1e-12);
    assert!(chance_agreement(3, 1, 4).is_err());
}

#[test]
fn missing_target_table_is_error() {
    let c = generate(&small_spec(4)).unwrap();
    let (sv, _) = truth_vocabs(&c.truth);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = Model::<f64>::new(ModelConfig::desk(), vec![sv], &mut rng).unwrap();
    assert!(score_neighbor_recovery(&model, &langs(), &c.truth, 10, 20).is_err());
}

#[test]
fn truth_vocab_excludes_reserved() {
    let c = generate(&small_spec(4)).unwrap();
    let (sv, _) = truth_vocabs(&c.truth);
    assert_eq!(sv.len(), c.truth.entries.len() + RESERVED);
}
