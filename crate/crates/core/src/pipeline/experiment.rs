//! End-to-end training experiments and budget curves.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::metrics::{per_document_f1, sign_test, token_prf, Prf};
use super::routing::{merge_expert, route_top_difficulty, RoutingStrategy};
use super::weighting::{
    agreement_weighting, apply_random_removal, apply_removal, apply_reweighting, apply_weights, ReweightConfig,
};
use crate::corpus::{AnnotationLayer, Corpus, Group, LabelType, SCHEMA_VERSION};
use crate::difficulty_model::{EmbeddingTable, RegressorConfig};
use crate::error::{Error, Result};
use crate::scoring::{corpus_difficulty, DifficultyRecord, ScoringConfig};
use crate::tagger::{crossfold_predict, examples_from_layers, majority_vote, train_crf, TaggerConfig, TaggerModel};

/// Splits a corpus by document into `(train, eval)`; `ceil(eval_fraction * n)`
/// seeded-random documents go to `eval`.
pub fn split_documents(corpus: &Corpus, eval_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    let n = corpus.documents().len();
    let n_eval = (eval_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) || n_eval == 0 || n_eval >= n {
        return Err(Error::InvalidConfig(format!("cannot hold out {eval_fraction} of {n} documents")));
    }
    let mut ids: Vec<String> = corpus.doc_ids().map(String::from).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let eval: BTreeSet<String> = ids[..n_eval].iter().cloned().collect();
    let train: BTreeSet<String> = ids[n_eval..].iter().cloned().collect();
    Ok((corpus.subset(&train), corpus.subset(&eval)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    None,
    /// Drop the most difficult fraction of training sentences.
    Remove {
        fraction: f64,
    },
    /// Drop a random fraction (a control for `remove`).
    RandomRemove {
        fraction: f64,
    },
    /// Down-weight sentences by difficulty score.
    Reweight {
        reweight: ReweightConfig,
    },
    /// Down-weight sentences by predicted crowd disagreement.
    Agreement {
        reweight: ReweightConfig,
        regressor: RegressorConfig,
    },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Remove { .. } => "remove",
            Strategy::RandomRemove { .. } => "random_remove",
            Strategy::Reweight { .. } => "reweight",
            Strategy::Agreement { .. } => "agreement",
        }
    }

    fn needs_scores(&self) -> bool {
        matches!(self, Strategy::Remove { .. } | Strategy::Reweight { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub label_type: LabelType,
    pub strategy: Strategy,
    pub tagger: TaggerConfig,
    /// Folds for proxy scoring when no scores are supplied.
    pub proxy_folds: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(label_type: LabelType, strategy: Strategy) -> Self {
        ExperimentConfig { label_type, strategy, tagger: TaggerConfig::default(), proxy_folds: 10, seed: 0 }
    }
}

/// Inputs of one experiment. Training tags are the per-token majority of
/// `train_layers`; evaluation compares against the majority of `gold`.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentData<'a> {
    pub train: &'a Corpus,
    pub train_layers: &'a [AnnotationLayer],
    /// Difficulty of the training sentences. Computed from out-of-fold
    /// proxy predictions when absent and the strategy needs it.
    pub scores: Option<&'a [DifficultyRecord]>,
    pub eval: &'a Corpus,
    pub gold: &'a [AnnotationLayer],
    pub embeddings: Option<&'a EmbeddingTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub label_type: LabelType,
    pub strategy: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub config: Value,
    pub seed: u64,
    pub per_document_f1: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn prf(&self) -> Prf {
        Prf { precision: self.precision, recall: self.recall, f1: self.f1 }
    }

    /// Sign-test p-value of this report's per-document F1 against `baseline`
    /// on the documents both reports share.
    pub fn sign_test_against(&self, baseline: &ExperimentReport) -> Result<f64> {
        let (a, b): (Vec<f64>, Vec<f64>) =
            self.per_document_f1.iter().filter_map(|(d, f)| baseline.per_document_f1.get(d).map(|g| (*f, *g))).unzip();
        sign_test(&a, &b)
    }
}

/// Collapses the layers of one label type into a single majority layer.
pub fn majority_layer(corpus: &Corpus, layers: &[AnnotationLayer], label_type: LabelType, id: &str) -> AnnotationLayer {
    let layers: Vec<&AnnotationLayer> = layers.iter().filter(|l| l.label_type == label_type).collect();
    let mut out = AnnotationLayer::new(id, Group::Expert, label_type);
    for s in corpus.sentences() {
        out.set_marks(&s.sent_id, &majority_vote(s, &layers));
    }
    out
}

/// Difficulty from out-of-fold tagger predictions used as the reference.
pub fn proxy_scores(
    corpus: &Corpus,
    crowd: &[AnnotationLayer],
    label_type: LabelType,
    folds: usize,
    seed: u64,
    tagger: &TaggerConfig,
) -> Result<Vec<DifficultyRecord>> {
    let proxy = crossfold_predict(corpus, crowd, label_type, folds, seed, tagger)?;
    corpus_difficulty(corpus, &[proxy], crowd, label_type, ScoringConfig::default())
}

/// Trains a tagger under the configured strategy.
pub fn train_with_strategy(data: &ExperimentData, config: &ExperimentConfig) -> Result<TaggerModel> {
    let label = config.label_type;
    let mut examples = examples_from_layers(data.train, data.train_layers, label);
    let computed;
    let scores = match (data.scores, config.strategy.needs_scores()) {
        (Some(s), _) => s,
        (None, true) => {
            computed =
                proxy_scores(data.train, data.train_layers, label, config.proxy_folds, config.seed, &config.tagger)?;
            &computed[..]
        }
        (None, false) => &[][..],
    };
    match &config.strategy {
        Strategy::None => {}
        Strategy::Remove { fraction } => examples = apply_removal(examples, scores, *fraction)?,
        Strategy::RandomRemove { fraction } => examples = apply_random_removal(examples, *fraction, config.seed)?,
        Strategy::Reweight { reweight } => apply_weights(&mut examples, &apply_reweighting(scores, reweight)?)?,
        Strategy::Agreement { reweight, regressor } => {
            let crowd: Vec<AnnotationLayer> =
                data.train_layers.iter().filter(|l| l.group == Group::Crowd).cloned().collect();
            let weights = agreement_weighting(data.train, &crowd, label, regressor, reweight, data.embeddings)?;
            apply_weights(&mut examples, &weights)?;
        }
    }
    log::info!("{}: training on {} sentences", config.strategy.name(), examples.len());
    train_crf(&examples, label, &config.tagger)
}

/// Strategy -> tagger -> token-level evaluation on `data.eval`.
pub fn run_training_experiment(data: &ExperimentData, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let model = train_with_strategy(data, config)?;
    Ok(evaluate_model(&model, data, config, None))
}

/// Token-level evaluation of `model` on `data.eval` against the majority of `data.gold`.
pub fn evaluate_model(
    model: &TaggerModel,
    data: &ExperimentData,
    config: &ExperimentConfig,
    budget: Option<usize>,
) -> ExperimentReport {
    let predicted = model.predict_layer(data.eval, "predicted");
    let gold = majority_layer(data.eval, data.gold, config.label_type, "gold");
    let prf = token_prf(&predicted, &gold, data.eval);
    ExperimentReport {
        schema_version: SCHEMA_VERSION.into(),
        label_type: config.label_type,
        strategy: config.strategy.name().into(),
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        budget,
        p_value: None,
        config: serde_json::to_value(config).expect("config serializes"),
        seed: config.seed,
        per_document_f1: per_document_f1(&predicted, &gold, data.eval),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub experiment: ExperimentConfig,
    pub routing: RoutingStrategy,
    /// Top percentile of scores counted as difficult when routing.
    pub percentile: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub budget: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// For each budget (a document count): route, merge expert annotation into
/// the crowd layers, train and evaluate. Budgets must be ascending. Routing
/// uses `data.scores`, or proxy scores when absent.
pub fn simulate_budget_curve(
    data: &ExperimentData,
    expert: &[AnnotationLayer],
    budgets: &[usize],
    config: &CurveConfig,
) -> Result<Vec<BudgetPoint>> {
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("budgets must be sorted ascending".into()));
    }
    let label = config.experiment.label_type;
    let computed;
    let scores = match data.scores {
        Some(s) => Some(s),
        None if config.routing == RoutingStrategy::TopDifficulty || config.experiment.strategy.needs_scores() => {
            let e = &config.experiment;
            computed = proxy_scores(data.train, data.train_layers, label, e.proxy_folds, e.seed, &e.tagger)?;
            Some(&computed[..])
        }
        None => None,
    };
    // Route once at the largest budget so smaller budgets are prefixes.
    let max = budgets.last().copied().unwrap_or(0);
    let plan = route_top_difficulty(
        scores.unwrap_or_default(),
        data.train,
        max,
        config.percentile,
        config.routing,
        config.experiment.seed,
    )?;
    let expert: Vec<AnnotationLayer> = expert.iter().filter(|l| l.label_type == label).cloned().collect();
    let crowd: Vec<AnnotationLayer> = data.train_layers.iter().filter(|l| l.label_type == label).cloned().collect();
    merge_expert(&crowd, &expert, &plan.routed_set(), data.train)?;

    budgets
        .par_iter()
        .map(|&budget| {
            let routed: BTreeSet<String> = plan.routed.iter().take(budget).cloned().collect();
            let merged = merge_expert(&crowd, &expert, &routed, data.train)?;
            let point_data = ExperimentData { train_layers: &merged, scores, ..*data };
            let model = train_with_strategy(&point_data, &config.experiment)?;
            let r = evaluate_model(&model, &point_data, &config.experiment, Some(budget));
            log::info!("budget {budget}: f1 {:.4}", r.f1);
            Ok(BudgetPoint { budget, precision: r.precision, recall: r.recall, f1: r.f1 })
        })
        .collect()
}

pub fn write_curve_csv<W: Write + ?Sized>(w: &mut W, points: &[BudgetPoint]) -> Result<()> {
    writeln!(w, "budget,precision,recall,f1")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.budget, p.precision, p.recall, p.f1)?;
    }
    Ok(())
}
