//! Ranking metrics for accuracy predictors and interpretability summaries of
//! the estimator's contribution tables.

mod insights;
mod rank;

pub use insights::{insights, InsightReport};
pub use rank::{
    kendall_tau, mid_ranks, rank_predictor, report, spearman_rho, transitivity_lower_bound, ArchScorer, RankReport,
    Targets,
};
