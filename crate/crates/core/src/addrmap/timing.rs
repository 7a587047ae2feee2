use serde::{Deserialize, Serialize};

use super::{AddressComponents, AddressMapping};
use crate::dram_sim::DimmGeometry;
use crate::error::{Error, Result};
use crate::rng::{tag, SeedStream};

/// Anything that answers "how long did accessing `a` then `b` take".
pub trait LatencyProbe {
    fn probe(&self, a: u64, b: u64) -> f64;
}

/// Synthetic row-buffer timing for a hidden mapping.
///
/// Returns `t_conflict` when both addresses hit the same bank on different
/// rows and `t_hit` otherwise, plus uniform jitter. The jitter is a pure
/// function of `(seed, a, b)`, so the oracle has no state and can be probed
/// concurrently.
#[derive(Debug, Clone)]
pub struct TimingOracle {
    mapping: AddressMapping,
    pub t_hit: f64,
    pub t_conflict: f64,
    pub jitter: f64,
    seed: u64,
}

impl TimingOracle {
    pub const DEFAULT_T_HIT: f64 = 80.0;
    pub const DEFAULT_T_CONFLICT: f64 = 200.0;
    pub const DEFAULT_JITTER: f64 = 5.0;

    pub fn new(mapping: AddressMapping, seed: u64) -> Self {
        TimingOracle {
            mapping,
            t_hit: Self::DEFAULT_T_HIT,
            t_conflict: Self::DEFAULT_T_CONFLICT,
            jitter: Self::DEFAULT_JITTER,
            seed,
        }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn mapping(&self) -> &AddressMapping {
        &self.mapping
    }
}

impl LatencyProbe for TimingOracle {
    fn probe(&self, a: u64, b: u64) -> f64 {
        let conflict = self.mapping.is_row_conflict(a, b).unwrap_or(false);
        let base = if conflict {
            self.t_conflict
        } else {
            self.t_hit
        };
        let u = SeedStream::new(self.seed).fork(tag::ORACLE).fork(a).unit(b);
        base + self.jitter * (2.0 * u - 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct GeometryCandidate {
    pub label: String,
    pub geometry: DimmGeometry,
    pub mapping: AddressMapping,
}

impl GeometryCandidate {
    pub fn stock() -> Vec<GeometryCandidate> {
        super::stock::StockGeometry::ALL
            .into_iter()
            .map(|s| GeometryCandidate {
                label: s.label().to_string(),
                geometry: s.geometry(),
                mapping: s.mapping(),
            })
            .collect()
    }

    /// Address of row 1 with every other component zero: probing it against
    /// `0x0` tests this candidate's row-start hypothesis.
    fn hypothesis_address(&self) -> Result<u64> {
        self.mapping.compose(&AddressComponents {
            row: 1,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InferenceConfig {
    /// Conflict when latency exceeds `margin * t_hit`.
    pub margin: f64,
    /// Same-row probes averaged for the hit-time estimate.
    pub hit_samples: u32,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            margin: 1.5,
            hit_samples: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub candidate: String,
    pub address: u64,
    pub latency: f64,
    pub conflict: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferredGeometry {
    /// Accepted candidate first, followed by any contenders sharing its row start.
    pub labels: Vec<String>,
    pub geometries: Vec<DimmGeometry>,
    pub ambiguous: bool,
    pub t_hit: f64,
    pub probes: Vec<ProbeRecord>,
}

/// Row-start decision tree over `candidates`, in order.
///
/// Each candidate predicts where row bits start; probing `0x0` against that
/// candidate's row-1 address produces a conflict exactly when the hypothesis
/// holds. The first conflicting candidate is accepted. Earlier candidates
/// that share its row start but failed their own probe cannot be told apart
/// by row-start probing, so they are returned with the ambiguity flag set.
pub fn infer_geometry(
    oracle: &impl LatencyProbe,
    candidates: &[GeometryCandidate],
    config: &InferenceConfig,
) -> Result<InferredGeometry> {
    if candidates.is_empty() {
        return Err(Error::Usage("no candidate geometries".into()));
    }
    let samples = config.hit_samples.max(1);
    // byte offsets inside the first burst: same row, same bank
    let t_hit = (1..=samples as u64)
        .map(|off| oracle.probe(0, off & 0x7))
        .sum::<f64>()
        / samples as f64;
    let threshold = config.margin * t_hit;

    let mut probes = Vec::new();
    for (i, cand) in candidates.iter().enumerate() {
        let address = cand.hypothesis_address()?;
        let latency = oracle.probe(0, address);
        let conflict = latency > threshold;
        probes.push(ProbeRecord {
            candidate: cand.label.clone(),
            address,
            latency,
            conflict,
        });
        if !conflict {
            continue;
        }
        let row_start = cand.mapping.row_bit_lsb();
        let mut chosen = vec![cand];
        chosen.extend(
            candidates[..i]
                .iter()
                .filter(|c| c.mapping.row_bit_lsb() == row_start),
        );
        return Ok(InferredGeometry {
            ambiguous: chosen.len() > 1,
            labels: chosen.iter().map(|c| c.label.clone()).collect(),
            geometries: chosen.iter().map(|c| c.geometry).collect(),
            t_hit,
            probes,
        });
    }
    Err(Error::Inference(format!(
        "no candidate row start produced a row conflict (t_hit {t_hit:.1}, threshold {threshold:.1})"
    )))
}
