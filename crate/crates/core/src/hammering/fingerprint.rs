use serde::{Deserialize, Serialize};

use super::distribution::BitFlipDistribution;
use super::sampling::sample_chunks;
use super::sweep::{
    extract_distribution, hammering_sweep, sweep_plan, ChunkObservation, SweepConfig,
};
use crate::addrmap::{AddressMapping, ChunkHandle};
use crate::dram_sim::{DeviceId, DimmDevice, Environment};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{mix, tag, SeedStream};
use crate::templating::HammeringPattern;

/// How the chunks of a session are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Allocation {
    /// A fresh allocation every session.
    #[default]
    Random,
    /// The same chunks every session for a given device, as when the
    /// fingerprinter can request the same physical region again.
    Pinned { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Chunks hammered per session.
    pub chunks_per_session: u32,
    /// Chunks the allocator can hand out.
    pub total_chunks: u32,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub allocation: Allocation,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            chunks_per_session: 8,
            total_chunks: 64,
            sweep: SweepConfig::default(),
            allocation: Allocation::Random,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        if self.chunks_per_session == 0 || self.chunks_per_session > self.total_chunks {
            return Err(Error::Config(format!(
                "cannot hammer {} of {} chunks per session",
                self.chunks_per_session, self.total_chunks
            )));
        }
        Ok(())
    }
}

/// Distribution of one hammered chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkDistribution {
    pub chunk_id: u32,
    pub distribution: BitFlipDistribution,
}

/// All chunk distributions of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub session_id: u64,
    /// Known only when the caller chooses to label the session.
    pub device_hint: Option<DeviceId>,
    pub chunks: Vec<ChunkDistribution>,
    pub config: SessionConfig,
    /// Simulated effort: pairs x activations x repeats, summed over chunks.
    pub work_units: u64,
}

impl Fingerprint {
    pub fn non_empty(&self) -> impl Iterator<Item = &ChunkDistribution> {
        self.chunks.iter().filter(|c| !c.distribution.is_empty())
    }
}

/// A fingerprint together with the raw observations it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub fingerprint: Fingerprint,
    pub observations: Vec<ChunkObservation>,
}

/// Chunk ids a session on `device` will hammer.
pub fn session_chunks(device: &DimmDevice, config: &SessionConfig, seed: u64) -> Result<Vec<u32>> {
    config.validate()?;
    if config.total_chunks as u64 > device.geometry.chunk_count() {
        return Err(Error::Config(format!(
            "{} chunks requested but a {} module holds {}",
            config.total_chunks,
            device.geometry.label(),
            device.geometry.chunk_count()
        )));
    }
    let allocator_seed = match config.allocation {
        Allocation::Random => mix(seed, tag::ALLOCATION),
        Allocation::Pinned { seed: pinned } => mix(pinned, device.id.0 as u64),
    };
    sample_chunks(
        config.total_chunks,
        config.chunks_per_session,
        allocator_seed,
    )
}

/// Runs one fingerprinting session and keeps the observations.
pub fn collect_session(
    device: &DimmDevice,
    mapping: &AddressMapping,
    pattern: &HammeringPattern,
    config: &SessionConfig,
    env: &Environment,
    seed: u64,
    exec: Execution,
) -> Result<Session> {
    let chunks = session_chunks(device, config, seed)?;
    let root = SeedStream::new(seed)
        .fork(tag::SESSION)
        .fork(device.id.0 as u64)
        .fork(device.seat_epoch as u64);
    let observed: Vec<Result<(ChunkObservation, u64)>> = exec.map(&chunks, |&id| {
        let chunk = ChunkHandle::from_index(id);
        let pairs = sweep_plan(device, mapping, chunk, &config.sweep)?
            .pairs
            .len() as u64;
        let obs = hammering_sweep(
            device,
            mapping,
            chunk,
            pattern,
            &config.sweep,
            env,
            root.fork(tag::CHUNK).fork(id as u64),
        )?;
        Ok((obs, pairs))
    });
    let mut observations = Vec::with_capacity(chunks.len());
    let mut work_units = 0u64;
    for r in observed {
        let (obs, pairs) = r?;
        work_units += pairs * config.sweep.activations * config.sweep.repeats as u64;
        observations.push(obs);
    }
    let fingerprint = Fingerprint {
        session_id: seed,
        device_hint: None,
        chunks: observations
            .iter()
            .map(|o| ChunkDistribution {
                chunk_id: o.chunk_id,
                distribution: extract_distribution(o),
            })
            .collect(),
        config: config.clone(),
        work_units,
    };
    Ok(Session {
        fingerprint,
        observations,
    })
}

/// Samples chunks, sweeps each and turns the flips into distributions.
pub fn extract_fingerprint(
    device: &DimmDevice,
    mapping: &AddressMapping,
    pattern: &HammeringPattern,
    config: &SessionConfig,
    env: &Environment,
    seed: u64,
    exec: Execution,
) -> Result<Fingerprint> {
    collect_session(device, mapping, pattern, config, env, seed, exec).map(|s| s.fingerprint)
}
