use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dram_sim::TrrModel;
use crate::error::{Error, Result};

/// Role of one aggressor slot inside a refresh interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotRole {
    /// One of the two double-sided aggressors (0 = lower row, 1 = upper row).
    Primary(u8),
    /// A decoy row; equal ids denote the same row.
    Secondary(u16),
}

/// Non-uniform hammering pattern.
///
/// Only the slot layout and the amplitude influence the simulator: every
/// distinct secondary slot spends `amplitude` activations of the refresh
/// interval and the primaries receive what is left. Phase and frequency are
/// carried along so that patterns round-trip with their full parameterisation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PatternFile", into = "PatternFile")]
pub struct HammeringPattern {
    slots: Vec<SlotRole>,
    phase: u32,
    amplitude: u32,
    frequency: u32,
    primary_slot_indices: (usize, usize),
}

impl HammeringPattern {
    pub fn new(
        slots: Vec<SlotRole>,
        phase: u32,
        amplitude: u32,
        frequency: u32,
        primary_slot_indices: (usize, usize),
    ) -> Result<Self> {
        let (i, j) = primary_slot_indices;
        if j != i + 1 || j >= slots.len() {
            return Err(Error::Config(format!(
                "primary slots ({i}, {j}) must be adjacent positions within {} slots",
                slots.len()
            )));
        }
        if slots[i] != SlotRole::Primary(0) || slots[j] != SlotRole::Primary(1) {
            return Err(Error::Config(format!(
                "slots {i} and {j} must hold the two primary aggressors"
            )));
        }
        let extra_primaries = slots
            .iter()
            .enumerate()
            .any(|(k, s)| k != i && k != j && matches!(s, SlotRole::Primary(_)));
        if extra_primaries {
            return Err(Error::Config(
                "primary aggressors may only appear at the primary indices".into(),
            ));
        }
        if amplitude == 0 || frequency == 0 {
            return Err(Error::Config(
                "amplitude and frequency must be at least 1".into(),
            ));
        }
        Ok(HammeringPattern {
            slots,
            phase,
            amplitude,
            frequency,
            primary_slot_indices,
        })
    }

    /// Plain double-sided hammering, no decoys.
    pub fn double_sided() -> Self {
        Self::new(
            vec![SlotRole::Primary(0), SlotRole::Primary(1)],
            0,
            1,
            1,
            (0, 1),
        )
        .expect("valid pattern")
    }

    /// Primaries followed by `decoys` distinct secondary slots.
    pub fn with_decoys(decoys: u16, amplitude: u32) -> Self {
        let mut slots = vec![SlotRole::Primary(0), SlotRole::Primary(1)];
        slots.extend((0..decoys).map(SlotRole::Secondary));
        Self::new(slots, 0, amplitude, 1, (0, 1)).expect("valid pattern")
    }

    pub fn slots(&self) -> &[SlotRole] {
        &self.slots
    }
    pub fn phase(&self) -> u32 {
        self.phase
    }
    pub fn amplitude(&self) -> u32 {
        self.amplitude
    }
    pub fn frequency(&self) -> u32 {
        self.frequency
    }
    pub fn primary_slot_indices(&self) -> (usize, usize) {
        self.primary_slot_indices
    }

    /// Distinct decoy rows.
    pub fn secondary_slot_count(&self) -> usize {
        self.slots
            .iter()
            .filter_map(|s| match s {
                SlotRole::Secondary(id) => Some(*id),
                SlotRole::Primary(_) => None,
            })
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Fraction of an interval's activations left for the primaries.
    pub fn primary_share(&self, interval_slots: u32) -> f64 {
        let budget = interval_slots.max(1) as f64;
        let spent = self.secondary_slot_count() as f64 * self.amplitude as f64;
        ((budget - spent) / budget).max(0.0)
    }

    /// The decoy rule: with TRR on, the tracker saturates on decoys only when
    /// there are at least `tracker_capacity` of them.
    pub fn evades(&self, trr: &TrrModel) -> bool {
        !trr.enabled || self.secondary_slot_count() >= trr.tracker_capacity as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternFile {
    pub slots: Vec<SlotRole>,
    pub phase: u32,
    pub amplitude: u32,
    pub frequency: u32,
    pub primary_slot_indices: (usize, usize),
    #[serde(default)]
    pub secondary_slot_count: Option<usize>,
}

impl TryFrom<PatternFile> for HammeringPattern {
    type Error = Error;

    fn try_from(f: PatternFile) -> Result<Self> {
        let p = HammeringPattern::new(
            f.slots,
            f.phase,
            f.amplitude,
            f.frequency,
            f.primary_slot_indices,
        )?;
        if let Some(n) = f.secondary_slot_count {
            if n != p.secondary_slot_count() {
                return Err(Error::Config(format!(
                    "declared secondary_slot_count {n} but slots hold {}",
                    p.secondary_slot_count()
                )));
            }
        }
        Ok(p)
    }
}

impl From<HammeringPattern> for PatternFile {
    fn from(p: HammeringPattern) -> Self {
        PatternFile {
            secondary_slot_count: Some(p.secondary_slot_count()),
            slots: p.slots,
            phase: p.phase,
            amplitude: p.amplitude,
            frequency: p.frequency,
            primary_slot_indices: p.primary_slot_indices,
        }
    }
}
