//! Hammering sweeps over 2 MB chunks and the distributions they yield.

mod distribution;
mod fingerprint;
mod persist;
mod sampling;
mod sweep;

pub use distribution::{BitFlipDistribution, ProbabilityDistribution, SparseDistribution};
pub use fingerprint::{
    collect_session, extract_fingerprint, session_chunks, Allocation, ChunkDistribution,
    Fingerprint, Session, SessionConfig,
};
pub use persist::{read_observations, write_observations, OBSERVATION_SCHEMA};
pub use sampling::sample_chunks;
pub use sweep::{
    extract_distribution, hammering_sweep, sweep_plan, ChunkObservation, RowSubset, SweepConfig,
    SweepPlan,
};
