//! Divergence-based matching, the reference store and chunk-overlap maths.

mod birthday;
mod jsd;
mod store;

pub use birthday::{overlap_probability, reference_overlap_probability, required_sample_size};
pub use jsd::js_divergence;
pub use store::{
    fingerprint_divergence, match_fingerprints, update_references, MatchDecision, MergeEvent,
    Reference, ReferenceId, ReferenceStore, ReferenceSummary, StoreSummary, Verdict, DEFAULT_TAU,
    STORE_SCHEMA,
};
