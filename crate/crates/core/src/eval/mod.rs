//! Metrics, cause-count statistics and the ablation runner.

mod ablation;
mod metrics;

pub use ablation::{
    evaluate, repetition_seed, run_ablation, split_corpus, AblationConfig, AblationResults,
    AblationRow, AblationSpec, Evaluation, Variant, VariantSummary,
};
pub use metrics::{cause_count_histogram, compute_metrics, CauseCountHistogram, Metrics};
