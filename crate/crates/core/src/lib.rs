//! Simulated Rowhammer fingerprinting: a population of DRAM modules with
//! hidden flip susceptibilities, the templating / hammering / matching
//! pipeline that fingerprints them, and the entropy and sampling maths
//! behind it.

pub mod addrmap;
pub mod analysis;
pub mod dram_sim;
pub mod error;
pub mod exec;
pub mod hammering;
pub mod harness;
pub mod matching;
pub mod records;
pub mod rng;
pub mod templating;

pub use error::{Error, Result};
pub use exec::Execution;
