use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::textpipe::{encode_grid, Grid, PAD};

fn toy(dim: usize) -> Model<f64> {
    let en = Vocabulary::from_tokens("en", (0..8).map(|i| format!("e{i}"))).unwrap();
    let fr = Vocabulary::from_tokens("fr", (0..8).map(|i| format!("f{i}"))).unwrap();
    let config = ModelConfig {
        embed_dim: dim,
        sentence_hidden: dim,
        review_hidden: dim,
        max_sentences: 3,
        max_words: 4,
        outputs: 1,
        dropout: 0.5,
    };
    Model::new(config, vec![en, fr], &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
}

fn grid(model: &Model<f64>, lang: &str, sentences: &[&[&str]]) -> Grid {
    let s: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| s.iter().map(|t| t.to_string()).collect())
        .collect();
    let c = model.config();
    encode_grid(&s, &model.language(lang).unwrap().vocab, c.max_sentences, c.max_words).unwrap()
}

/// Unrolled recurrence: sentence cell over each row, review cell over the
/// rows, skipping PAD words and empty rows.
fn oracle(model: &Model<f64>, lang: &str, grid: &Grid) -> Vec<f64> {
    let store = model.store();
    let table = store.value(model.language(lang).unwrap().table);
    let enc = model.encoder();
    let mut review = vec![0.0; enc.review.hidden];
    for s in 0..grid.sentences() {
        let words: Vec<u32> = grid.sentence(s).iter().copied().filter(|&id| id != PAD).collect();
        if words.is_empty() {
            continue;
        }
        let mut h = vec![0.0; enc.sentence.hidden];
        for id in words {
            h = gru_step(table.row(id as usize), &h, &enc.sentence, store).unwrap();
        }
        review = gru_step(&h, &review, &enc.review, store).unwrap();
    }
    review
}

#[test]
fn encoder_matches_unrolled_recurrence() {
    let m = toy(4);
    let g = grid(&m, "en", &[&["e1", "e2", "e3", "e0"], &["e5"]]);
    let got = m
        .view("en")
        .unwrap()
        .encode(&g, false, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    let want = oracle(&m, "en", &g);
    for (a, b) in got.0.iter().zip(&want) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn batched_encoding_matches_single() {
    let m = toy(4);
    let grids = vec![
        grid(&m, "en", &[&["e1", "e2"], &["e3"]]),
        grid(&m, "en", &[&["e4"]]),
        grid(&m, "en", &[&["e1", "e2"], &["e7", "e6", "e5", "e4"], &["e0"]]),
    ];
    let view = m.view("en").unwrap();
    let batch = view.representations(&grids).unwrap();
    for (g, r) in grids.iter().zip(&batch) {
        let want = oracle(&m, "en", g);
        for (a, b) in r.0.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn identical_grids_identical_representations() {
    let m = toy(4);
    let g = grid(&m, "en", &[&["e1", "e2"]]);
    let view = m.view("en").unwrap();
    let a = view.encode(&g, false, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = view.encode(&g, false, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn training_mode_applies_dropout() {
    let m = toy(4);
    let g = grid(&m, "en", &[&["e1", "e2"]]);
    let view = m.view("en").unwrap();
    let eval = view.encode(&g, false, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let train = view.encode(&g, true, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_ne!(eval, train);
    // surviving coordinates of the final dropout are scaled copies or zero
    assert!(train.0.iter().any(|&v| v == 0.0));
}

#[test]
fn swapping_tables_shares_encoder_and_head() {
    let m = toy(4);
    let en = m.view("en").unwrap();
    let fr = m.view("fr").unwrap();
    assert!(std::ptr::eq(en.encoder(), fr.encoder()));
    assert!(std::ptr::eq(en.head(), fr.head()));
    assert_ne!(en.embeddings(), fr.embeddings());
    // same ids through different tables give different representations
    let ids = Grid::new(3, 4, vec![2, 3, 4, 5, 6, 7, 0, 0, 0, 0, 0, 0]).unwrap();
    let a = en.representations(std::slice::from_ref(&ids)).unwrap();
    let b = fr.representations(std::slice::from_ref(&ids)).unwrap();
    assert_ne!(a, b);
    assert!(m.view("de").is_err());
}

#[test]
fn out_of_range_id_is_data_error() {
    let m = toy(4);
    let bad = Grid::new(3, 4, vec![99; 12]).unwrap();
    let err = m.view("en").unwrap().predict_proba(&[bad]).unwrap_err();
    assert!(matches!(err, crate::error::Error::Data(_)));
}

#[test]
fn wrong_grid_shape_rejected() {
    let m = toy(4);
    let bad = Grid::new(2, 4, vec![0; 8]).unwrap();
    assert!(m.view("en").unwrap().predict_proba(&[bad]).is_err());
}

#[test]
fn probabilities_in_unit_interval() {
    let m = toy(4);
    let grids = vec![grid(&m, "fr", &[&["f1"]]), grid(&m, "fr", &[&["f2", "f3"]])];
    let p = m.view("fr").unwrap().predict_proba(&grids).unwrap();
    assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
}

#[test]
fn duplicate_language_rejected() {
    let en = Vocabulary::from_tokens("en", ["a".to_string()]).unwrap();
    let r = Model::<f32>::new(
        ModelConfig::desk(),
        vec![en.clone(), en],
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    assert!(r.is_err());
}
