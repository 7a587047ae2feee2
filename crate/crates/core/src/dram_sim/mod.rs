//! Behavioural DRAM model: populations of modules with hidden per-cell
//! flip susceptibilities, TRR and hammering execution.

mod device;
mod field;
mod geometry;
mod hammer;
mod truth;

pub use device::{
    create_mixed_population, create_population, reseat, DeviceId, DimmDevice, Environment,
    PopulationSpec, TrrModel, DEFAULT_RESEAT_JITTER, DEFAULT_RESEAT_PERTURBATION,
};
pub use field::{Cell, FlipDirection, ReseatLayer, SusceptibilityField, SusceptibilityParams};
pub use geometry::DimmGeometry;
pub use hammer::{
    effective_activations, flip_probability, hammer_cached, hammer_execute, hammer_rows,
    secondary_rows, AggressorPair, Flip, FlipSet, RowCache, OUTER_WEIGHT, VICTIM_WEIGHT,
};
pub use truth::{expected_sweep_flips, ground_truth_distribution};
