use std::cmp::Reverse;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::score::PatternScore;
use crate::dram_sim::DeviceId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedPattern {
    pub pattern_index: usize,
    /// Devices this pattern is assigned to.
    pub devices: Vec<DeviceId>,
    pub total_flips: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub patterns: Vec<SelectedPattern>,
    pub uncovered: Vec<DeviceId>,
}

impl Selection {
    /// The pattern assigned to `device`.
    pub fn pattern_for(&self, device: DeviceId) -> Option<usize> {
        self.patterns
            .iter()
            .find(|p| p.devices.contains(&device))
            .map(|p| p.pattern_index)
    }
}

/// Greedy set cover of the evaluated devices. Stops once `coverage`
/// (fraction of devices) is reached or no pattern adds a device.
pub fn select_patterns(scores: &[PatternScore], coverage: f64) -> Result<Selection> {
    if scores.is_empty() {
        return Err(Error::Usage("no pattern scores to select from".into()));
    }
    let universe: BTreeSet<DeviceId> = scores
        .iter()
        .flat_map(|s| s.per_device_flips.keys().copied())
        .collect();
    let goal = (coverage.clamp(0.0, 1.0) * universe.len() as f64).ceil() as usize;
    let mut uncovered = universe.clone();
    let mut patterns = Vec::new();
    while universe.len() - uncovered.len() < goal {
        let best = scores
            .iter()
            .map(|s| {
                let gain: Vec<DeviceId> = s
                    .per_device_flips
                    .iter()
                    .filter(|(d, &f)| f > 0 && uncovered.contains(d))
                    .map(|(&d, _)| d)
                    .collect();
                (s, gain)
            })
            .filter(|(_, gain)| !gain.is_empty())
            .min_by_key(|(s, gain)| {
                (
                    Reverse(gain.len()),
                    Reverse(s.total_flips),
                    s.secondary_count,
                    s.pattern_index,
                )
            });
        let Some((s, gain)) = best else { break };
        for d in &gain {
            uncovered.remove(d);
        }
        patterns.push(SelectedPattern {
            pattern_index: s.pattern_index,
            devices: gain,
            total_flips: s.total_flips,
        });
    }
    Ok(Selection {
        patterns,
        uncovered: uncovered.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(idx: usize, flips: &[(u32, u64)], secondary: usize) -> PatternScore {
        let per_device_flips = flips
            .iter()
            .map(|&(d, f)| (DeviceId(d), f))
            .collect::<std::collections::BTreeMap<_, _>>();
        PatternScore {
            pattern_index: idx,
            total_flips: flips.iter().map(|f| f.1).sum(),
            devices_covered: flips.iter().filter(|f| f.1 > 0).count(),
            secondary_count: secondary,
            per_device_flips,
        }
    }

    #[test]
    fn one_pattern_covers_all() {
        let s = select_patterns(&[score(0, &[(0, 3), (1, 4)], 4)], 1.0).unwrap();
        assert_eq!(s.patterns.len(), 1);
        assert!(s.uncovered.is_empty());
    }

    #[test]
    fn tie_breaks() {
        let scores = [
            score(0, &[(0, 3), (1, 0)], 4),
            score(1, &[(0, 9), (1, 0)], 8),
            score(2, &[(0, 9), (1, 0)], 5),
        ];
        let s = select_patterns(&scores, 1.0).unwrap();
        assert_eq!(s.patterns.len(), 1);
        assert_eq!(s.patterns[0].pattern_index, 2);
        assert_eq!(s.uncovered, vec![DeviceId(1)]);
    }

    #[test]
    fn empty_scores_error() {
        assert!(matches!(select_patterns(&[], 1.0), Err(Error::Usage(_))));
    }
}
