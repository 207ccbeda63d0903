//! Triple-classification metrics and ablation orchestration.

mod ablation;
mod metrics;

pub use ablation::{
    default_instruction, labeled_sets, run_ablation, sample_ontology_fraction, AblationReport,
    AblationRow, AblationSpec, Backend, LlmResources, MeanMetric,
};
pub use metrics::{evaluate, Metrics};
