use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use annodiff::corpus::{
    generate_synthetic, load_annotations, load_corpus_file, write_annotations, write_corpus, AnnotationLayer, Corpus,
    Document, Group, LabelType, LoadReport, SyntheticConfig,
};
use annodiff::difficulty_model::{
    grid_search, predict_difficulty, train_regressor, EmbeddingTable, NgramFeaturizer, RegressorConfig, RegressorKind,
    RegressorModel,
};
use annodiff::pipeline::{
    evaluate_model, merge_expert, route_top_difficulty, simulate_budget_curve, split_documents, train_with_strategy,
    write_curve_csv, CurveConfig, ExperimentConfig, ExperimentData, ExperimentReport, ReweightConfig, RoutingPlan,
    RoutingStrategy, Strategy, ThresholdMode,
};
use annodiff::scoring::{
    corpus_difficulty, inter_annotator_agreement, read_records, write_records_csv, write_records_jsonl,
    DifficultyRecord, ScoreMode, ScoringConfig,
};
use annodiff::tagger::{crossfold_predict, TaggerConfig, TaggerModel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::OutDir;
use crate::{CliError, CommandPlan};

const SCHEMA_VERSION: &str = "1";

type Result<T> = std::result::Result<T, CliError>;

pub fn execute(cmd: &Command, plan: &CommandPlan) -> Result<Vec<PathBuf>> {
    let plan = plan.to_value();
    let out = match cmd {
        Command::Ingest(a) => ingest(a, &plan)?,
        Command::Synth(a) => synth(a, &plan)?,
        Command::Score(a) => score(a, &plan)?,
        Command::Proxy(a) => proxy(a, &plan)?,
        Command::Agree(a) => agree(a, &plan)?,
        Command::TrainDifficulty(a) => train_difficulty(a, &plan)?,
        Command::PredictDifficulty(a) => predict(a, &plan)?,
        Command::TrainTagger(a) => train_tagger(a, &plan)?,
        Command::Route(a) => route(a, &plan)?,
        Command::Merge(a) => merge(a, &plan)?,
        Command::Curve(a) => curve(a, &plan)?,
        Command::Report(a) => report(a, &plan)?,
        Command::SignTest(a) => sign_test(a, &plan)?,
    };
    Ok(out.written().to_vec())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Prefixes I/O errors with the path involved.
fn at<T, E: Into<CliError>>(path: &Path, r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| match e.into() {
        CliError::Io(e) | CliError::Core(annodiff::Error::Io(e)) => {
            CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        }
        other => other,
    })
}

fn corpus_at(path: &Path) -> Result<(Corpus, LoadReport)> {
    at(path, load_corpus_file(path))
}

fn read_text(path: &Path) -> Result<String> {
    at(path, fs::read_to_string(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        annodiff::Error::Malformed { path: path.to_path_buf(), line: e.line(), message: e.to_string() }.into()
    })
}

fn load_layers(corpus: &Corpus, paths: &[PathBuf], report: &mut LoadReport) -> Result<Vec<AnnotationLayer>> {
    let mut layers = Vec::new();
    for p in paths {
        layers.extend(at(p, load_annotations(p, corpus, report))?);
    }
    Ok(layers)
}

fn load_embeddings(path: Option<&Path>) -> Result<Option<EmbeddingTable>> {
    path.map(|p| at(p, File::open(p)).and_then(|f| Ok(EmbeddingTable::parse(BufReader::new(f), p)?))).transpose()
}

/// Reads difficulty records, keeping those of `label` when given.
fn load_scores(path: &Path, label: Option<LabelType>) -> Result<Vec<DifficultyRecord>> {
    let records = read_records(BufReader::new(at(path, File::open(path))?), path)?;
    Ok(records.into_iter().filter(|r| label.is_none_or(|l| r.label_type == l)).collect())
}

/// The single label type of a set of records.
fn sole_label(records: &[DifficultyRecord], path: &Path) -> Result<LabelType> {
    let labels: BTreeSet<LabelType> = records.iter().map(|r| r.label_type).collect();
    match labels.len() {
        1 => Ok(*labels.first().expect("one label")),
        0 => Err(usage(format!("{}: no difficulty records", path.display()))),
        _ => Err(usage(format!("{}: records of several label types; pass --label", path.display()))),
    }
}

/// Drops records of sentences outside `corpus` (e.g. held-out documents).
fn restrict(scores: Option<Vec<DifficultyRecord>>, corpus: &Corpus) -> Option<Vec<DifficultyRecord>> {
    scores.map(|mut s| {
        s.retain(|r| corpus.sentence(&r.sent_id).is_some());
        s
    })
}

fn labels_or_all(label: Option<LabelType>) -> Vec<LabelType> {
    label.map_or_else(|| LabelType::ALL.to_vec(), |l| vec![l])
}

fn tagger_config(a: &TaggerArgs, seed: u64) -> TaggerConfig {
    TaggerConfig { lambda: a.l2, learning_rate: a.learning_rate, epochs: a.epochs, batch_size: a.batch_size, seed }
}

fn records_file(
    out: &mut OutDir,
    stem: &str,
    format: Format,
    records: &[DifficultyRecord],
    plan: &Value,
) -> Result<()> {
    match format {
        Format::Jsonl => {
            out.write(&format!("{stem}.jsonl"), |w| Ok(write_records_jsonl(&mut *w, records, Some(plan))?))
        }
        Format::Csv => out.write(&format!("{stem}.csv"), |w| Ok(write_records_csv(&mut *w, records, Some(plan))?)),
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: &'static str,
    plan: &'a Value,
    #[serde(flatten)]
    body: T,
}

fn envelope<'a, T: Serialize>(plan: &'a Value, body: T) -> Envelope<'a, T> {
    Envelope { schema_version: SCHEMA_VERSION, plan, body }
}

fn ingest(a: &IngestArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, layers, report) = match (&a.corpus, &a.text_dir) {
        (Some(path), _) => {
            let (corpus, mut report) = corpus_at(path)?;
            let layers = load_layers(&corpus, &a.annotations, &mut report)?;
            (corpus, layers, report)
        }
        (None, Some(dir)) => {
            let mut files: Vec<PathBuf> =
                at(dir, fs::read_dir(dir))?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
            files.retain(|p| p.extension().is_some_and(|x| x == "txt"));
            files.sort();
            let mut report = LoadReport::default();
            let mut docs = Vec::new();
            for p in files {
                let id = p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| usage(format!("bad file name {}", p.display())))?;
                let (doc, dropped) = Document::from_text(id, &read_text(&p)?);
                report.dropped_sentences += dropped;
                docs.push(doc);
            }
            let corpus = Corpus::new(docs)?;
            let layers = load_layers(&corpus, &a.annotations, &mut report)?;
            (corpus, layers, report)
        }
        (None, None) => return Err(usage("one of --corpus or --text-dir is required")),
    };
    let mut out = OutDir::create(&a.out)?;
    out.write("corpus.jsonl", |w| Ok(write_corpus(&mut *w, &corpus, Some(plan))?))?;
    out.write("annotations.jsonl", |w| Ok(write_annotations(&mut *w, &layers, Some(plan))?))?;
    let body = json!({
        "documents": corpus.documents().len(),
        "sentences": corpus.num_sentences(),
        "layers": layers.len(),
        "dropped_sentences": report.dropped_sentences,
        "discarded_spans": report.discarded_spans,
    });
    out.write_json("ingest_report.json", &envelope(plan, body))?;
    Ok(out)
}

fn synth(a: &SynthArgs, plan: &Value) -> Result<OutDir> {
    let config = match a.preset {
        Preset::Small => SyntheticConfig::small(a.seed),
        Preset::Medium => SyntheticConfig::medium(a.seed),
    };
    let syn = generate_synthetic(&config)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("corpus.jsonl", |w| Ok(write_corpus(&mut *w, &syn.corpus, Some(plan))?))?;
    out.write("gold.jsonl", |w| Ok(write_annotations(&mut *w, &syn.gold, Some(plan))?))?;
    out.write("crowd.jsonl", |w| Ok(write_annotations(&mut *w, &syn.crowd, Some(plan))?))?;
    out.write("expert.jsonl", |w| Ok(write_annotations(&mut *w, &syn.expert, Some(plan))?))?;
    out.write("flags.jsonl", |w| {
        let header = json!({ "kind": "header", "schema_version": SCHEMA_VERSION, "plan": plan });
        writeln!(w, "{header}")?;
        for (sent_id, difficult) in &syn.flags {
            let line = json!({ "schema_version": SCHEMA_VERSION, "sent_id": sent_id, "difficult": difficult });
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    out.write_json("synth_config.json", &envelope(plan, json!({ "config": config })))?;
    Ok(out)
}

fn score(a: &ScoreArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, mut report) = corpus_at(&a.corpus)?;
    let crowd = load_layers(&corpus, &a.crowd, &mut report)?;
    let reference = if a.ref_from_model.is_empty() {
        load_layers(&corpus, &a.reference, &mut report)?
    } else {
        let mut layers = load_layers(&corpus, &a.ref_from_model, &mut report)?;
        for l in &mut layers {
            l.group = Group::Model;
        }
        layers
    };
    for (what, layers) in [("--crowd", &crowd), ("reference", &reference)] {
        if !layers.iter().any(|l| l.label_type == a.label) {
            return Err(usage(format!("no {what} layers of label type {}", a.label)));
        }
    }
    let mode = match a.mode {
        Mode::PerWorkerMean => ScoreMode::PerWorkerMean,
        Mode::Aggregate => ScoreMode::Aggregate,
    };
    let records = corpus_difficulty(&corpus, &reference, &crowd, a.label, ScoringConfig { mode })?;
    let mut out = OutDir::create(&a.out)?;
    records_file(&mut out, "difficulty", a.format, &records, plan)?;
    Ok(out)
}

fn proxy(a: &ProxyArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, mut report) = corpus_at(&a.corpus)?;
    let crowd = load_layers(&corpus, &a.crowd, &mut report)?;
    let config = tagger_config(&a.tagger, a.seed);
    let mut layers = Vec::new();
    for label in labels_or_all(a.label) {
        if !crowd.iter().any(|l| l.label_type == label) {
            if a.label.is_some() {
                return Err(usage(format!("no crowd layers of label type {label}")));
            }
            continue;
        }
        layers.push(crossfold_predict(&corpus, &crowd, label, a.k, a.seed, &config)?);
    }
    let mut out = OutDir::create(&a.out)?;
    out.write("proxy.jsonl", |w| Ok(write_annotations(&mut *w, &layers, Some(plan))?))?;
    Ok(out)
}

fn agree(a: &AgreeArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, mut report) = corpus_at(&a.corpus)?;
    let mut layers = load_layers(&corpus, &a.layers, &mut report)?;
    if let Some(g) = a.group {
        let group = match g {
            GroupArg::Crowd => Group::Crowd,
            GroupArg::Expert => Group::Expert,
            GroupArg::Model => Group::Model,
        };
        layers.retain(|l| l.group == group);
    }
    let mut agreement = BTreeMap::new();
    for label in labels_or_all(a.label) {
        let n = layers.iter().filter(|l| l.label_type == label).count();
        let value =
            if a.label.is_none() && n < 2 { None } else { Some(inter_annotator_agreement(&corpus, &layers, label)?) };
        agreement.insert(label.to_string(), value);
    }
    let mut out = OutDir::create(&a.out)?;
    out.write_json("agreement.json", &envelope(plan, json!({ "agreement": agreement })))?;
    Ok(out)
}

/// The documented search space: L2 strength x learning rate, plus the hidden
/// size for the dense model.
fn regressor_grid(base: &RegressorConfig) -> Vec<RegressorConfig> {
    let hidden: &[usize] = match base.kind {
        RegressorKind::LinearNgram => &[0],
        RegressorKind::DenseEmbed => &[16, 32],
    };
    let mut grid = Vec::new();
    for lambda in [1e-6, 1e-5, 1e-4, 1e-3] {
        for learning_rate in [0.01, 0.05, 0.1] {
            for &h in hidden {
                let hidden = if h == 0 { base.hidden } else { h };
                grid.push(RegressorConfig { lambda, learning_rate, hidden, ..base.clone() });
            }
        }
    }
    grid
}

fn train_difficulty(a: &TrainDifficultyArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, _) = corpus_at(&a.corpus)?;
    let records = load_scores(&a.scores, a.label)?;
    let label = sole_label(&records, &a.scores)?;
    let embeddings = load_embeddings(a.embeddings.as_deref())?;
    let mut texts = Vec::with_capacity(records.len());
    let mut targets = Vec::with_capacity(records.len());
    for r in &records {
        let s = corpus.sentence(&r.sent_id).ok_or_else(|| annodiff::Error::UnknownSentence(r.sent_id.clone()))?;
        texts.push(s.words().collect::<Vec<&str>>());
        targets.push(r.score);
    }
    let kind = match a.kind {
        Kind::LinearNgram => RegressorKind::LinearNgram,
        Kind::DenseEmbed => RegressorKind::DenseEmbed,
    };
    let base = RegressorConfig {
        kind,
        lambda: a.l2,
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        hidden: a.hidden,
        epsilon: a.epsilon,
        featurizer: NgramFeaturizer { n_max: a.n_max, hash_dim: a.hash_dim, ..NgramFeaturizer::default() },
        seed: a.seed,
    };
    base.validate()?;
    let mut out = OutDir::create(&a.out)?;
    let config = if a.grid {
        let grid = regressor_grid(&base);
        let result = grid_search(&texts, &targets, label, &grid, a.k, a.seed, embeddings.as_ref())?;
        let best = result.best.clone();
        out.write_json("grid.json", &envelope(plan, json!({ "grid": grid, "result": result })))?;
        best
    } else {
        base
    };
    let model = train_regressor(&texts, &targets, label, &config, embeddings.as_ref())?;
    let text = model.to_json(Some(plan))?;
    out.write("regressor.json", |w| Ok(writeln!(w, "{text}")?))?;
    Ok(out)
}

fn predict(a: &PredictDifficultyArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, _) = corpus_at(&a.corpus)?;
    let model = RegressorModel::from_json(&read_text(&a.model)?)?;
    let embeddings = load_embeddings(a.embeddings.as_deref())?;
    let records = predict_difficulty(&model, &corpus, model.label_type, embeddings.as_ref())?;
    let mut out = OutDir::create(&a.out)?;
    records_file(&mut out, "predictions", a.format, &records, plan)?;
    Ok(out)
}

fn split(corpus: &Corpus, s: &SplitArgs) -> Result<(Corpus, Option<Corpus>)> {
    match s.holdout {
        Some(f) => {
            let (train, eval) = split_documents(corpus, f, s.split_seed)?;
            Ok((train, Some(eval)))
        }
        None => Ok((corpus.clone(), None)),
    }
}

fn train_tagger(a: &TrainTaggerArgs, plan: &Value) -> Result<OutDir> {
    let reweight = ReweightConfig {
        tau: a.tau,
        a: a.a,
        mode: match a.threshold_mode {
            ThresholdArg::Score => ThresholdMode::Score,
            ThresholdArg::Percentile => ThresholdMode::Percentile,
        },
    };
    let strategy = match a.strategy {
        StrategyArg::None => Strategy::None,
        StrategyArg::Remove => Strategy::Remove { fraction: a.fraction },
        StrategyArg::RandomRemove => Strategy::RandomRemove { fraction: a.fraction },
        StrategyArg::Reweight => Strategy::Reweight { reweight },
        StrategyArg::Agreement => {
            Strategy::Agreement { reweight, regressor: RegressorConfig { seed: a.seed, ..RegressorConfig::default() } }
        }
    };
    if matches!(a.strategy, StrategyArg::Remove | StrategyArg::Reweight) && a.scores.is_none() {
        return Err(usage(format!("--strategy {} needs --scores", strategy.name())));
    }
    if a.split.holdout.is_some() != !a.gold.is_empty() {
        return Err(usage("--holdout and --gold go together"));
    }

    let (corpus, mut report) = corpus_at(&a.corpus)?;
    let layers = load_layers(&corpus, &a.layers, &mut report)?;
    let gold = load_layers(&corpus, &a.gold, &mut report)?;
    let scores = a.scores.as_deref().map(|p| load_scores(p, Some(a.label))).transpose()?;
    let (train, eval) = split(&corpus, &a.split)?;
    let scores = restrict(scores, &train);
    let config = ExperimentConfig {
        tagger: tagger_config(&a.tagger, a.seed),
        seed: a.seed,
        ..ExperimentConfig::new(a.label, strategy)
    };
    let data = ExperimentData {
        train: &train,
        train_layers: &layers,
        scores: scores.as_deref(),
        eval: eval.as_ref().unwrap_or(&train),
        gold: &gold,
        embeddings: None,
    };
    let model = train_with_strategy(&data, &config)?;
    let mut out = OutDir::create(&a.out)?;
    let text = model.to_json(Some(plan))?;
    out.write("tagger.json", |w| Ok(writeln!(w, "{text}")?))?;
    if eval.is_some() {
        let report = evaluate_model(&model, &data, &config, None);
        out.write_json("report.json", &report)?;
    }
    Ok(out)
}

fn route(a: &RouteArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, _) = corpus_at(&a.corpus)?;
    let strategy = match a.strategy {
        RoutingArg::TopDifficulty => RoutingStrategy::TopDifficulty,
        RoutingArg::Random => RoutingStrategy::Random,
    };
    let scores = match &a.scores {
        Some(p) => load_scores(p, a.label)?,
        None if strategy == RoutingStrategy::TopDifficulty => {
            return Err(usage("--strategy top-difficulty needs --scores"));
        }
        None => Vec::new(),
    };
    let routing = route_top_difficulty(&scores, &corpus, a.budget, a.percentile, strategy, a.seed)?;
    let mut out = OutDir::create(&a.out)?;
    out.write_json("routing.json", &envelope(plan, &routing))?;
    Ok(out)
}

fn merge(a: &MergeArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, mut report) = corpus_at(&a.corpus)?;
    let crowd = load_layers(&corpus, &a.crowd, &mut report)?;
    let expert = load_layers(&corpus, &a.expert, &mut report)?;
    let routing: RoutingPlan = read_json(&a.routing)?;
    if let Some(d) = routing.routed.iter().find(|d| corpus.document(d).is_none()) {
        return Err(usage(format!("routing plan names unknown document {d}")));
    }
    let merged = merge_expert(&crowd, &expert, &routing.routed_set(), &corpus)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("merged.jsonl", |w| Ok(write_annotations(&mut *w, &merged, Some(plan))?))?;
    Ok(out)
}

fn curve(a: &CurveArgs, plan: &Value) -> Result<OutDir> {
    let (corpus, mut report) = corpus_at(&a.corpus)?;
    let crowd = load_layers(&corpus, &a.crowd, &mut report)?;
    let expert = load_layers(&corpus, &a.expert, &mut report)?;
    let gold = load_layers(&corpus, &a.gold, &mut report)?;
    let scores = a.scores.as_deref().map(|p| load_scores(p, Some(a.label))).transpose()?;
    let (train, eval) = split_documents(&corpus, a.holdout, a.split_seed)?;
    let scores = restrict(scores, &train);
    let config = CurveConfig {
        experiment: ExperimentConfig {
            tagger: tagger_config(&a.tagger, a.seed),
            proxy_folds: a.k,
            seed: a.seed,
            ..ExperimentConfig::new(a.label, Strategy::None)
        },
        routing: match a.routing {
            RoutingArg::TopDifficulty => RoutingStrategy::TopDifficulty,
            RoutingArg::Random => RoutingStrategy::Random,
        },
        percentile: a.percentile,
    };
    let data = ExperimentData {
        train: &train,
        train_layers: &crowd,
        scores: scores.as_deref(),
        eval: &eval,
        gold: &gold,
        embeddings: None,
    };
    let points = simulate_budget_curve(&data, &expert, &a.budgets, &config)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("curve.csv", |w| {
        writeln!(w, "# schema_version={SCHEMA_VERSION} plan={plan}")?;
        Ok(write_curve_csv(&mut *w, &points)?)
    })?;
    out.write_json("curve.json", &envelope(plan, json!({ "points": points })))?;
    Ok(out)
}

/// Sign-test p-value; with no informative pairs the two sides are
/// indistinguishable and the p-value is 1.
fn p_value(wins: usize, losses: usize) -> Result<f64> {
    match annodiff::pipeline::sign_test_counts(wins, losses) {
        Err(annodiff::Error::NoInformativePairs) => {
            log::warn!("no informative pairs for the sign test; reporting p = 1");
            Ok(1.0)
        }
        other => Ok(other?),
    }
}

fn report(a: &ReportArgs, plan: &Value) -> Result<OutDir> {
    let text = read_text(&a.model)?;
    let model = TaggerModel::from_json(&text)?;
    let file: Value = serde_json::from_str(&text).map_err(annodiff::Error::from)?;
    let model_plan = file.get("plan").cloned().unwrap_or(Value::Null);
    let strategy = model_plan.pointer("/options/strategy").and_then(Value::as_str).unwrap_or("none").to_string();

    let (corpus, mut load) = corpus_at(&a.corpus)?;
    let gold = load_layers(&corpus, &a.gold, &mut load)?;
    let (train, eval) = split(&corpus, &a.split)?;
    let eval = eval.unwrap_or(train);
    let config = ExperimentConfig {
        tagger: model.config.clone(),
        seed: model.config.seed,
        ..ExperimentConfig::new(model.label_type, Strategy::None)
    };
    let data =
        ExperimentData { train: &eval, train_layers: &[], scores: None, eval: &eval, gold: &gold, embeddings: None };
    let mut result = evaluate_model(&model, &data, &config, None);
    result.strategy = strategy;
    result.config = json!({ "model_plan": model_plan, "plan": plan });
    if let Some(b) = &a.baseline {
        let baseline: ExperimentReport = read_json(b)?;
        let (wins, losses, _) = compare(&result.per_document_f1, &baseline.per_document_f1);
        result.p_value = Some(p_value(wins, losses)?);
    }
    let mut out = OutDir::create(&a.out)?;
    out.write_json("report.json", &result)?;
    Ok(out)
}

/// Wins, losses and ties of `a` over `b` on shared documents.
fn compare(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> (usize, usize, usize) {
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (doc, x) in a {
        if let Some(y) = b.get(doc) {
            if x > y {
                wins += 1;
            } else if x < y {
                losses += 1;
            } else {
                ties += 1;
            }
        }
    }
    (wins, losses, ties)
}

fn sign_test(a: &SignTestArgs, plan: &Value) -> Result<OutDir> {
    let ra: ExperimentReport = read_json(&a.a)?;
    let rb: ExperimentReport = read_json(&a.b)?;
    let (wins, losses, ties) = compare(&ra.per_document_f1, &rb.per_document_f1);
    if wins + losses + ties == 0 {
        return Err(usage("the two reports share no documents"));
    }
    let p = p_value(wins, losses)?;
    let mut out = OutDir::create(&a.out)?;
    let body = json!({ "p_value": p, "wins": wins, "losses": losses, "ties": ties });
    out.write_json("sign_test.json", &envelope(plan, body))?;
    Ok(out)
}
