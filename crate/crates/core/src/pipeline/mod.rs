//! Difficulty-aware training: sentence removal and re-weighting, expert
//! routing and merging, budget curves, token-level metrics and the sign test.

mod experiment;
mod metrics;
mod routing;
mod weighting;

pub use experiment::{
    evaluate_model, majority_layer, proxy_scores, run_training_experiment, simulate_budget_curve, split_documents,
    train_with_strategy, write_curve_csv, BudgetPoint, CurveConfig, ExperimentConfig, ExperimentData, ExperimentReport,
    Strategy,
};
pub use metrics::{per_document_f1, sign_test, sign_test_counts, token_prf, Prf};
pub use routing::{merge_expert, route_top_difficulty, RoutingPlan, RoutingStrategy};
pub use weighting::{
    agreement_weighting, apply_random_removal, apply_removal, apply_reweighting, apply_weights, disagreement_targets,
    quantile, removal_count, reweight, ReweightConfig, ThresholdMode,
};
