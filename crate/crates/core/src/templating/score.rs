use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pattern::HammeringPattern;
use crate::dram_sim::{hammer_execute, AggressorPair, DeviceId, DimmDevice, Environment};
use crate::exec::Execution;
use crate::rng::{tag, SeedStream};

/// Fixed trial sweep used to evaluate patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub activations: u64,
    /// Lower aggressor rows hammered in rank 0, bank 0.
    pub rows: Vec<u32>,
    pub seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            activations: 10_000_000,
            rows: vec![100, 1_000, 10_000],
            seed: 0,
        }
    }
}

impl TrialConfig {
    pub fn pairs(&self, device: &DimmDevice) -> Vec<AggressorPair> {
        self.rows
            .iter()
            .filter(|&&r| r + 2 < device.geometry.rows_per_bank)
            .map(|&r| AggressorPair::double_sided(0, 0, r))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternScore {
    /// Position of the pattern in the scored list.
    pub pattern_index: usize,
    pub total_flips: u64,
    pub devices_covered: usize,
    pub secondary_count: usize,
    /// Every evaluated device, including those with no flips.
    pub per_device_flips: BTreeMap<DeviceId, u64>,
}

pub fn score_pattern(
    pattern_index: usize,
    pattern: &HammeringPattern,
    devices: &[DimmDevice],
    trial: &TrialConfig,
    exec: Execution,
) -> PatternScore {
    let env = Environment::default();
    let flips = exec.map(devices, |d| {
        let stream = SeedStream::new(trial.seed)
            .fork(tag::TRIAL)
            .fork(d.id.0 as u64);
        trial
            .pairs(d)
            .into_iter()
            .map(|pair| {
                hammer_execute(
                    d,
                    pattern,
                    pair,
                    trial.activations,
                    &env,
                    stream.fork(pair.low as u64),
                )
                .map(|f| f.len() as u64)
                .unwrap_or(0)
            })
            .sum::<u64>()
    });
    let per_device_flips: BTreeMap<DeviceId, u64> =
        devices.iter().map(|d| d.id).zip(flips).collect();
    PatternScore {
        pattern_index,
        total_flips: per_device_flips.values().sum(),
        devices_covered: per_device_flips.values().filter(|&&f| f > 0).count(),
        secondary_count: pattern.secondary_slot_count(),
        per_device_flips,
    }
}
