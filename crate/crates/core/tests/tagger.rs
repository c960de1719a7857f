#![allow(clippy::needless_range_loop)]

mod common;

use annodiff::corpus::{generate_synthetic, LabelType, SyntheticConfig};
use annodiff::pipeline::{majority_layer, token_prf};
use annodiff::tagger::{
    crossfold_predict, examples_from_layers, loss_and_gradient, train_crf, train_crf_unweighted,
    train_crf_with_history, viterbi_decode, Tag, TaggerConfig, TaggerModel, WeightedExample,
};
use common::*;
use rand::Rng;

#[test]
fn log_partition_matches_enumeration() {
    let mut r = rng(11);
    for _ in 0..20 {
        let len = r.gen_range(2..=6);
        let s = random_sentence(&mut r, len);
        let model = random_model(&mut r, &[&s], 0.0);
        let (fast, slow) = (model.log_partition(&s), brute_log_partition(&model, &s));
        assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(12);
    for _ in 0..20 {
        let batch: Vec<WeightedExample> = (0..3)
            .map(|_| {
                let mut ex = random_example(&mut r, 5);
                ex.weight = r.gen_range(0.1..2.0);
                ex
            })
            .collect();
        let sents: Vec<_> = batch.iter().map(|e| &e.sentence).collect();
        let model = random_model(&mut r, &sents, 0.01);
        let (_, grad) = loss_and_gradient(&model, &batch).unwrap();
        let h = 1e-5;
        let loss_at = |m: &TaggerModel| loss_and_gradient(m, &batch).unwrap().0;
        let check = |analytic: f64, plus: TaggerModel, minus: TaggerModel| {
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "analytic {analytic} numeric {numeric}");
        };
        let ids: Vec<u64> = model.emissions.keys().copied().take(6).collect();
        for id in ids {
            for y in 0..3 {
                let (mut p, mut m) = (model.clone(), model.clone());
                p.emissions.get_mut(&id).unwrap()[y] += h;
                m.emissions.get_mut(&id).unwrap()[y] -= h;
                check(grad.emissions[&id][y], p, m);
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let (mut p, mut m) = (model.clone(), model.clone());
                p.transitions[a][b] += h;
                m.transitions[a][b] -= h;
                check(grad.transitions[a][b], p, m);
            }
        }
    }
}

#[test]
fn viterbi_matches_constrained_enumeration() {
    let mut r = rng(13);
    for _ in 0..20 {
        let len = r.gen_range(2..=6);
        let s = random_sentence(&mut r, len);
        let model = random_model(&mut r, &[&s], 0.0);
        let path = viterbi_decode(&model, &s);
        assert!(is_valid_bio(&path));
        assert_eq!(path, brute_viterbi(&model, &s));
    }
}

fn toy_examples() -> Vec<WeightedExample> {
    let mut r = rng(3);
    (0..30).map(|_| random_example(&mut r, 6)).collect()
}

fn small_config() -> TaggerConfig {
    TaggerConfig { epochs: 4, batch_size: 7, ..TaggerConfig::default() }
}

#[test]
fn unit_weights_equal_unweighted_training() {
    let data = toy_examples();
    let (a, ha) = train_crf_with_history(&data, LabelType::I, &small_config()).unwrap();
    let (b, hb) = train_crf_unweighted(&data, LabelType::I, &small_config()).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(a, b);
}

#[test]
fn zero_weight_contributes_nothing_and_double_weight_doubles() {
    let data = toy_examples();
    let sents: Vec<_> = data.iter().map(|e| &e.sentence).collect();
    let model = random_model(&mut rng(5), &sents, 0.0);
    let single = |w: f64| {
        let mut ex = data[0].clone();
        ex.weight = w;
        loss_and_gradient(&model, &[ex]).unwrap()
    };
    let (l0, g0) = single(0.0);
    assert_eq!(l0, 0.0);
    assert!(g0.emissions.values().flatten().chain(g0.transitions.iter().flatten()).all(|&v| v == 0.0));

    let (l1, g1) = single(1.0);
    let (l2, g2) = single(2.0);
    assert_eq!(l2, 2.0 * l1);
    for (id, row) in &g1.emissions {
        for y in 0..3 {
            assert_eq!(g2.emissions[id][y], 2.0 * row[y]);
        }
    }

    // A zero-weight example leaves a batch's gradient unchanged.
    let mut with_zero = data[1..4].to_vec();
    let (base_loss, base) = loss_and_gradient(&model, &with_zero).unwrap();
    let mut zero = data[0].clone();
    zero.weight = 0.0;
    with_zero.push(zero);
    let (loss, grad) = loss_and_gradient(&model, &with_zero).unwrap();
    assert_eq!(loss, base_loss);
    assert_eq!(grad.transitions, base.transitions);
}

#[test]
fn all_zero_weights_is_degenerate() {
    let data: Vec<_> = toy_examples()
        .into_iter()
        .map(|mut e| {
            e.weight = 0.0;
            e
        })
        .collect();
    assert!(matches!(train_crf(&data, LabelType::O, &small_config()), Err(annodiff::Error::DegenerateTrainingSet)));
    assert!(train_crf(&[], LabelType::O, &small_config()).is_err());
}

#[test]
fn separable_toy_problem_is_learned() {
    // "drug" words are always inside a span, everything else outside.
    let texts = [
        "patients took aspirin daily",
        "aspirin helped many patients",
        "the trial used ibuprofen",
        "ibuprofen reduced pain",
        "we gave aspirin and ibuprofen",
        "nothing was given here",
    ];
    let drugs = ["aspirin", "ibuprofen"];
    let data: Vec<WeightedExample> = texts
        .iter()
        .map(|t| {
            let s = sentence(t);
            let tags = s.words().map(|w| if drugs.contains(&w) { Tag::B } else { Tag::O }).collect();
            WeightedExample::new(s, tags, 1.0).unwrap()
        })
        .collect();
    let model =
        train_crf(&data, LabelType::I, &TaggerConfig { epochs: 30, batch_size: 2, ..Default::default() }).unwrap();
    for ex in &data {
        assert_eq!(viterbi_decode(&model, &ex.sentence), ex.tags);
    }
}

#[test]
fn training_is_deterministic() {
    let data = toy_examples();
    let a = train_crf(&data, LabelType::P, &small_config()).unwrap();
    let b = train_crf(&data, LabelType::P, &small_config()).unwrap();
    assert_eq!(a.to_json(None).unwrap(), b.to_json(None).unwrap());
    let c = train_crf(&data, LabelType::P, &TaggerConfig { seed: 9, ..small_config() }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn model_file_round_trip() {
    let model = train_crf(&toy_examples(), LabelType::P, &small_config()).unwrap();
    let back = TaggerModel::from_json(&model.to_json(None).unwrap()).unwrap();
    assert_eq!(back, model);
}

#[test]
fn crossfold_on_noise_free_corpus_recovers_gold() {
    let cfg = SyntheticConfig { easy_noise_rate: 0.0, hard_noise_rate: 0.0, ..SyntheticConfig::small(2) };
    let syn = generate_synthetic(&cfg).unwrap();
    let proxy = crossfold_predict(&syn.corpus, &syn.crowd, LabelType::P, 10, 0, &TaggerConfig::default()).unwrap();
    let gold = majority_layer(&syn.corpus, &syn.gold, LabelType::P, "gold");
    let f1 = token_prf(&proxy, &gold, &syn.corpus).f1;
    assert!(f1 >= 0.95, "f1 {f1}");
    assert_eq!(examples_from_layers(&syn.corpus, &syn.crowd, LabelType::P).len(), syn.corpus.num_sentences());
}
