//! Entropy maths, the Jaccard baseline and classification metrics.

mod entropy;
mod jaccard;
mod metrics;

pub use entropy::{
    empirical_entropy, required_entropy_bits, theoretical_entropy_bits, EmpiricalEntropy,
};
pub use jaccard::jaccard;
pub use metrics::{
    classification_metrics, pair_metrics, threshold_sweep, Confusion, LabeledDecision,
    MetricsReport, ThresholdSweep,
};
