use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pattern::{HammeringPattern, SlotRole};
use super::score::TrialConfig;
use crate::dram_sim::{hammer_execute, DimmDevice, Environment};
use crate::exec::Execution;
use crate::rng::{tag, SeedStream};

/// Parameter ranges the fuzzer draws from, inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub slots: (u32, u32),
    pub amplitude: (u32, u32),
    pub frequency: (u32, u32),
    #[serde(default)]
    pub trial: TrialConfig,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            slots: (2, 24),
            amplitude: (1, 8),
            frequency: (1, 8),
            trial: TrialConfig::default(),
        }
    }
}

/// The pattern tried at position `trial`; trial 0 is plain double-sided.
pub fn candidate(trial: u32, config: &FuzzConfig, interval: u32, seed: u64) -> HammeringPattern {
    if trial == 0 {
        return HammeringPattern::double_sided();
    }
    let mut rng = SeedStream::new(seed)
        .fork(tag::FUZZ)
        .fork(trial as u64)
        .rng();
    let n = rng.random_range(config.slots.0.max(2)..=config.slots.1.max(2)) as usize;
    let i = rng.random_range(0..n - 1);
    let decoys = (n - 2).max(1) as u16;
    let slots = (0..n)
        .map(|k| {
            if k == i {
                SlotRole::Primary(0)
            } else if k == i + 1 {
                SlotRole::Primary(1)
            } else {
                SlotRole::Secondary(rng.random_range(0..decoys))
            }
        })
        .collect();
    let amplitude = rng.random_range(config.amplitude.0.max(1)..=config.amplitude.1.max(1));
    let frequency = rng.random_range(config.frequency.0.max(1)..=config.frequency.1.max(1));
    let phase = rng.random_range(0..interval.max(1));
    HammeringPattern::new(slots, phase, amplitude, frequency, (i, i + 1))
        .expect("fuzzer builds valid patterns")
}

fn flips_somewhere(
    pattern: &HammeringPattern,
    devices: &[DimmDevice],
    trial: &TrialConfig,
) -> bool {
    let env = Environment::default();
    devices.iter().any(|d| {
        trial.pairs(d).into_iter().any(|pair| {
            hammer_execute(
                d,
                pattern,
                pair,
                trial.activations,
                &env,
                SeedStream::new(trial.seed),
            )
            .map(|f| !f.is_empty())
            .unwrap_or(false)
        })
    })
}

/// Tries `budget` candidates and keeps those that flip at least one bit on
/// at least one device, in trial order.
pub fn fuzz_patterns(
    devices: &[DimmDevice],
    budget: u32,
    seed: u64,
    config: &FuzzConfig,
    exec: Execution,
) -> Vec<HammeringPattern> {
    let interval = devices
        .first()
        .map(|d| d.trr.refresh_interval_slots)
        .unwrap_or(64);
    let kept = exec.map_range(budget as usize, |t| {
        let p = candidate(t as u32, config, interval, seed);
        flips_somewhere(&p, devices, &config.trial).then_some(p)
    });
    kept.into_iter().flatten().collect()
}
