//! Pattern discovery: fuzzing, scoring and greedy selection.

mod fuzz;
mod pattern;
mod score;
mod select;

pub use fuzz::{candidate, fuzz_patterns, FuzzConfig};
pub use pattern::{HammeringPattern, PatternFile, SlotRole};
pub use score::{score_pattern, PatternScore, TrialConfig};
pub use select::{select_patterns, SelectedPattern, Selection};
