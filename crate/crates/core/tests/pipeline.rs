mod common;

use std::collections::BTreeSet;

use annodiff::corpus::{generate_synthetic, AnnotationLayer, Group, LabelType, SyntheticConfig, SyntheticCorpus};
use annodiff::difficulty_model::RegressorConfig;
use annodiff::pipeline::*;
use annodiff::scoring::{corpus_difficulty, DifficultyRecord, ScoringConfig, Source};
use annodiff::tagger::{examples_from_layers, TaggerConfig};
use annodiff::Error;
use common::*;

fn record(id: &str, score: f64) -> DifficultyRecord {
    DifficultyRecord { sent_id: id.into(), label_type: LabelType::I, score, source: Source::Reference }
}

fn synthetic(docs: usize, seed: u64) -> SyntheticCorpus {
    generate_synthetic(&SyntheticConfig { num_docs: docs, ..SyntheticConfig::small(seed) }).unwrap()
}

#[test]
fn removal_drops_the_top_scores() {
    let syn = synthetic(25, 0);
    let examples = examples_from_layers(&syn.corpus, &syn.crowd, LabelType::I);
    assert_eq!(examples.len(), 150);
    let scores: Vec<_> =
        examples.iter().enumerate().map(|(i, e)| record(&e.sentence.sent_id, (i % 50) as f64 / 50.0)).collect();

    assert_eq!(apply_removal(examples.clone(), &scores, 0.0).unwrap(), examples);
    let kept = apply_removal(examples.clone(), &scores, 0.04).unwrap();
    assert_eq!(kept.len(), 144);
    // Scores 0.98 appear three times (ids 49, 99, 149); the next ones are 0.96.
    let removed: BTreeSet<_> =
        examples.iter().filter(|e| !kept.contains(e)).map(|e| e.sentence.sent_id.clone()).collect();
    let mut top: Vec<_> = scores.iter().filter(|r| r.score >= 0.96).collect();
    top.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.sent_id.cmp(&b.sent_id)));
    let expected: BTreeSet<_> = top[..6].iter().map(|r| r.sent_id.clone()).collect();
    assert_eq!(removed, expected);
    assert!(apply_removal(examples.clone(), &scores, 1.0).unwrap().is_empty());

    let missing = apply_removal(examples.clone(), &scores[1..], 0.1).unwrap_err();
    assert!(matches!(missing, Error::MissingScore(id) if id == examples[0].sentence.sent_id));
}

#[test]
fn removal_ties_go_by_ascending_id() {
    let syn = synthetic(2, 1);
    let examples = examples_from_layers(&syn.corpus, &syn.crowd, LabelType::P);
    let scores: Vec<_> = examples.iter().map(|e| record(&e.sentence.sent_id, 0.5)).collect();
    let kept = apply_removal(examples.clone(), &scores, 0.25).unwrap();
    let mut ids: Vec<_> = examples.iter().map(|e| e.sentence.sent_id.clone()).collect();
    ids.sort();
    let removed: Vec<_> = ids.iter().filter(|id| !kept.iter().any(|k| &&k.sentence.sent_id == id)).cloned().collect();
    assert_eq!(removed, ids[..3].to_vec());
}

#[test]
fn reweighting_points() {
    let scores = vec![record("a", 0.8), record("b", 1.0), record("c", 0.9), record("d", 0.1)];
    let w = apply_reweighting(&scores, &ReweightConfig::default()).unwrap();
    assert_eq!(w["a"], 1.0);
    assert_eq!(w["b"], 0.5);
    assert_eq!(w["c"], 0.75);
    assert_eq!(w["d"], 1.0);
    assert!(apply_reweighting(&scores, &ReweightConfig { tau: 1.0, ..Default::default() }).is_err());
}

#[test]
fn percentile_mode_targets_the_top_fraction() {
    let scores: Vec<_> = (0..10).map(|i| record(&format!("s{i}"), i as f64 / 20.0)).collect();
    let cfg = ReweightConfig { mode: ThresholdMode::Percentile, ..Default::default() };
    let w = apply_reweighting(&scores, &cfg).unwrap();
    let lowered = w.values().filter(|&&v| v < 1.0).count();
    assert_eq!(lowered, 2);
    assert!(w["s9"] < w["s8"] && w["s8"] < 1.0);
}

#[test]
fn agreement_weighting_identical_workers_gives_unit_weights() {
    let syn = synthetic(10, 2);
    let gold = syn.gold_layer(LabelType::I);
    let crowd: Vec<AnnotationLayer> = (0..3)
        .map(|j| AnnotationLayer { annotator_id: format!("w{j}"), group: Group::Crowd, ..gold.clone() })
        .collect();
    let w = agreement_weighting(
        &syn.corpus,
        &crowd,
        LabelType::I,
        &RegressorConfig::default(),
        &ReweightConfig::default(),
        None,
    )
    .unwrap();
    assert_eq!(w.len(), syn.corpus.num_sentences());
    assert!(w.values().all(|&v| v == 1.0));
    assert!(agreement_weighting(
        &syn.corpus,
        &crowd[..1],
        LabelType::I,
        &RegressorConfig::default(),
        &ReweightConfig::default(),
        None
    )
    .is_err());
}

#[test]
fn agreement_weighting_down_weights_flagged_sentences() {
    let syn = synthetic(200, 3);
    let cfg = ReweightConfig { mode: ThresholdMode::Percentile, ..Default::default() };
    let run =
        || agreement_weighting(&syn.corpus, &syn.crowd, LabelType::I, &RegressorConfig::default(), &cfg, None).unwrap();
    let w = run();
    let (mut hard, mut easy) = (Vec::new(), Vec::new());
    for (id, flagged) in &syn.flags {
        if *flagged {
            hard.push(w[id])
        } else {
            easy.push(w[id])
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&hard) < mean(&easy), "{} vs {}", mean(&hard), mean(&easy));
    assert_eq!(w, run());
}

#[test]
fn merge_switches_per_document() {
    let syn = synthetic(6, 4);
    let docs: Vec<String> = syn.corpus.doc_ids().map(String::from).collect();
    let crowd: Vec<_> = syn.crowd.iter().filter(|l| l.label_type == LabelType::O).cloned().collect();
    let expert: Vec<_> = syn.expert.iter().filter(|l| l.label_type == LabelType::O).cloned().collect();

    assert_eq!(merge_expert(&crowd, &expert, &BTreeSet::new(), &syn.corpus).unwrap(), crowd);
    let all: BTreeSet<_> = docs.iter().cloned().collect();
    assert_eq!(merge_expert(&crowd, &expert, &all, &syn.corpus).unwrap(), expert);

    let routed: BTreeSet<_> = [docs[0].clone()].into();
    let merged = merge_expert(&crowd, &expert, &routed, &syn.corpus).unwrap();
    for l in &merged {
        let covers_a = l.covers(&docs[0]);
        assert_eq!(covers_a, l.group == Group::Expert, "{}", l.annotator_id);
        assert_eq!(l.covers(&docs[1]), l.group == Group::Crowd);
    }
    assert_eq!(merge_expert(&merged, &expert, &routed, &syn.corpus).unwrap(), merged);

    let partial = AnnotationLayer { coverage: Some([docs[1].clone()].into()), ..expert[0].clone() };
    match merge_expert(&crowd, &[partial], &routed, &syn.corpus) {
        Err(Error::MissingExpert(d)) => assert_eq!(d, vec![docs[0].clone()]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn routing_ranks_documents_by_difficult_count() {
    let corpus = corpus_of(&[
        ("A", "One two three. Four five six. Seven eight nine. Ten eleven twelve."),
        ("B", "One two three. Four five six. Seven eight nine. Ten eleven twelve."),
    ]);
    let ids: Vec<String> = corpus.sentences().map(|s| s.sent_id.clone()).collect();
    // A has three difficult sentences, B one.
    let values = [0.9, 0.9, 0.9, 0.1, 0.9, 0.1, 0.1, 0.1];
    let scores: Vec<_> = ids.iter().zip(values).map(|(id, v)| record(id, v)).collect();
    let plan = route_top_difficulty(&scores, &corpus, 1, 50.0, RoutingStrategy::TopDifficulty, 0).unwrap();
    assert_eq!(plan.routed, vec!["A".to_string()]);
    assert!(route_top_difficulty(&scores, &corpus, 0, 5.0, RoutingStrategy::TopDifficulty, 0)
        .unwrap()
        .routed
        .is_empty());
    for bad in [0.0, 100.0, -3.0] {
        assert!(route_top_difficulty(&scores, &corpus, 1, bad, RoutingStrategy::TopDifficulty, 0).is_err());
    }
    // Equal counts fall back to ascending doc id.
    let flat: Vec<_> = ids.iter().map(|id| record(id, 0.5)).collect();
    let plan = route_top_difficulty(&flat, &corpus, 1, 5.0, RoutingStrategy::TopDifficulty, 0).unwrap();
    assert_eq!(plan.routed, vec!["A".to_string()]);
}

#[test]
fn random_routing_is_seeded() {
    let syn = synthetic(30, 5);
    let plan = |seed| route_top_difficulty(&[], &syn.corpus, 10, 5.0, RoutingStrategy::Random, seed).unwrap();
    assert_eq!(plan(1), plan(1));
    assert_ne!(plan(1).routed, plan(2).routed);
    assert_eq!(plan(1).routed_set().len(), 10);
}

#[test]
fn token_prf_examples() {
    let corpus = corpus_of(&[("d", "w0 w1 w2 w3 w4")]);
    let sid = corpus.sentences().next().unwrap().sent_id.clone();
    let layer = |spans: &[(usize, usize)]| {
        let mut l = AnnotationLayer::new("x", Group::Model, LabelType::P);
        for &(a, b) in spans {
            l.add_span(&sid, a, b).unwrap();
        }
        l
    };
    let prf = token_prf(&layer(&[(1, 3)]), &layer(&[(2, 4)]), &corpus);
    assert_eq!(prf, Prf { precision: 0.5, recall: 0.5, f1: 0.5 });
    assert_eq!(token_prf(&layer(&[(0, 2)]), &layer(&[(0, 2)]), &corpus), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
    assert_eq!(token_prf(&layer(&[]), &layer(&[(0, 2)]), &corpus), Prf { precision: 0.0, recall: 0.0, f1: 0.0 });
}

#[test]
fn sign_test_examples() {
    let a = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.5];
    let b = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.5];
    assert_eq!(sign_test(&a, &b).unwrap(), 112.0 / 1024.0);
    assert_eq!(sign_test(&b, &a).unwrap(), 112.0 / 1024.0);
    assert!(matches!(sign_test(&[0.3], &[0.3]), Err(Error::NoInformativePairs)));
    assert!(sign_test(&[0.3], &[0.3, 0.1]).is_err());
}

fn experiment_setup(seed: u64) -> (SyntheticCorpus, annodiff::corpus::Corpus, annodiff::corpus::Corpus) {
    let syn = synthetic(40, seed);
    let (train, eval) = split_documents(&syn.corpus, 0.25, seed).unwrap();
    (syn, train, eval)
}

fn fast(label: LabelType, strategy: Strategy) -> ExperimentConfig {
    ExperimentConfig {
        tagger: TaggerConfig { epochs: 5, ..Default::default() },
        proxy_folds: 3,
        ..ExperimentConfig::new(label, strategy)
    }
}

#[test]
fn reweight_with_zero_slope_equals_baseline() {
    let (syn, train, eval) = experiment_setup(6);
    let scores = corpus_difficulty(&train, &syn.gold, &syn.crowd, LabelType::P, ScoringConfig::default()).unwrap();
    let data = ExperimentData {
        train: &train,
        train_layers: &syn.crowd,
        scores: Some(&scores),
        eval: &eval,
        gold: &syn.gold,
        embeddings: None,
    };
    let base = run_training_experiment(&data, &fast(LabelType::P, Strategy::None)).unwrap();
    let flat = Strategy::Reweight { reweight: ReweightConfig { a: 0.0, ..Default::default() } };
    let same = run_training_experiment(&data, &fast(LabelType::P, flat)).unwrap();
    assert_eq!(base.prf(), same.prf());
    assert_eq!(base.per_document_f1, same.per_document_f1);
    assert!((0.0..=1.0).contains(&base.f1));
}

#[test]
fn experiments_are_deterministic_and_use_proxy_scores() {
    let (syn, train, eval) = experiment_setup(7);
    let data = ExperimentData {
        train: &train,
        train_layers: &syn.crowd,
        scores: None,
        eval: &eval,
        gold: &syn.gold,
        embeddings: None,
    };
    let cfg = fast(LabelType::I, Strategy::Reweight { reweight: ReweightConfig::default() });
    let a = run_training_experiment(&data, &cfg).unwrap();
    let b = run_training_experiment(&data, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.strategy, "reweight");
    let p = a.sign_test_against(&run_training_experiment(&data, &fast(LabelType::I, Strategy::None)).unwrap());
    assert!(p.is_err() || (0.0..=1.0).contains(&p.unwrap()));
}

#[test]
fn budget_zero_is_the_crowd_baseline() {
    let (syn, train, eval) = experiment_setup(8);
    let scores = corpus_difficulty(&train, &syn.gold, &syn.crowd, LabelType::O, ScoringConfig::default()).unwrap();
    let data = ExperimentData {
        train: &train,
        train_layers: &syn.crowd,
        scores: Some(&scores),
        eval: &eval,
        gold: &syn.gold,
        embeddings: None,
    };
    let cfg = CurveConfig {
        experiment: fast(LabelType::O, Strategy::None),
        routing: RoutingStrategy::TopDifficulty,
        percentile: 5.0,
    };
    let curve = simulate_budget_curve(&data, &syn.expert, &[0], &cfg).unwrap();
    let base = run_training_experiment(&data, &cfg.experiment).unwrap();
    assert_eq!(curve.len(), 1);
    assert_eq!((curve[0].precision, curve[0].recall, curve[0].f1), (base.precision, base.recall, base.f1));

    assert!(simulate_budget_curve(&data, &syn.expert, &[5, 1], &cfg).is_err());
    let thin: Vec<_> =
        syn.expert.iter().map(|l| AnnotationLayer { coverage: Some(BTreeSet::new()), ..l.clone() }).collect();
    assert!(matches!(simulate_budget_curve(&data, &thin, &[0, 3], &cfg), Err(Error::MissingExpert(d)) if d.len() == 3));

    let mut csv = Vec::new();
    write_curve_csv(&mut csv, &curve).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("budget,precision,recall,f1\n0,"));
}
