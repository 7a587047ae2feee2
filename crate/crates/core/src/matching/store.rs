use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::jsd::js_divergence;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hammering::{BitFlipDistribution, Fingerprint};
use crate::records;

pub const DEFAULT_TAU: f64 = 0.8;
pub const STORE_SCHEMA: &str = "rowprint.references";
const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceId(pub u32);

impl fmt::Display for ReferenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ref-{}", self.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub chunks: BTreeMap<u32, BitFlipDistribution>,
    /// Device label, once known.
    pub label: Option<String>,
}

/// Two references collapsed into one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub into: ReferenceId,
    pub absorbed: ReferenceId,
    pub session_id: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceStore {
    pub references: BTreeMap<ReferenceId, Reference>,
    pub merge_log: Vec<MergeEvent>,
    next_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceSummary {
    pub id: ReferenceId,
    pub label: Option<String>,
    pub chunks: usize,
    pub flips: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoreSummary {
    pub references: Vec<ReferenceSummary>,
    pub merges: Vec<MergeEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "reference")]
pub enum Verdict {
    Matched(ReferenceId),
    /// The id the new reference will receive.
    NewDevice(ReferenceId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchDecision {
    pub verdict: Verdict,
    /// Smallest divergence seen; `None` when the store is empty.
    pub min_divergence: Option<f64>,
    /// (fingerprint chunk, reference chunk) achieving the minimum.
    pub best_pair: Option<(u32, u32)>,
    pub tau: f64,
    /// Every reference with a pair at or below `tau`, ascending.
    pub bridged: Vec<ReferenceId>,
}

impl ReferenceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.references.len()
    }

    pub fn is_empty(&self) -> bool {
        self.references.is_empty()
    }

    pub fn next_id(&self) -> ReferenceId {
        ReferenceId(self.next_id)
    }

    pub fn get(&self, id: ReferenceId) -> Option<&Reference> {
        self.references.get(&id)
    }

    /// Reference whose label is `label`.
    pub fn find_label(&self, label: &str) -> Option<ReferenceId> {
        self.references
            .iter()
            .find(|(_, r)| r.label.as_deref() == Some(label))
            .map(|(&id, _)| id)
    }

    /// Adds `fp` as a fresh reference carrying `label`.
    pub fn enroll(&mut self, fp: &Fingerprint, label: &str) -> ReferenceId {
        let decision = MatchDecision {
            verdict: Verdict::NewDevice(self.next_id()),
            min_divergence: None,
            best_pair: None,
            tau: 0.0,
            bridged: Vec::new(),
        };
        let id = update_references(self, fp, &decision);
        self.references.get_mut(&id).expect("just added").label = Some(label.to_string());
        id
    }

    /// Per-reference chunk counts plus the merge history.
    pub fn summary(&self) -> StoreSummary {
        StoreSummary {
            references: self
                .references
                .iter()
                .map(|(id, r)| ReferenceSummary {
                    id: *id,
                    label: r.label.clone(),
                    chunks: r.chunks.len(),
                    flips: r.chunks.values().map(BitFlipDistribution::total).sum(),
                })
                .collect(),
            merges: self.merge_log.clone(),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        records::write_lines(out, STORE_SCHEMA, STORE_VERSION, [self])
    }

    pub fn read<R: BufRead>(input: R, label: &str) -> Result<Self> {
        let mut v: Vec<ReferenceStore> =
            records::read_lines(input, STORE_SCHEMA, STORE_VERSION, label)?;
        if v.len() != 1 {
            return Err(Error::Parse {
                path: label.to_string(),
                line: 2,
                message: format!("expected one store record, found {}", v.len()),
            });
        }
        Ok(v.remove(0))
    }
}

fn closest<'a>(
    probe: impl Iterator<Item = (u32, &'a BitFlipDistribution)> + Clone,
    reference: impl Iterator<Item = (u32, &'a BitFlipDistribution)> + Clone,
) -> Option<(f64, (u32, u32))> {
    let mut best: Option<(f64, (u32, u32))> = None;
    for (pc, pd) in probe.filter(|(_, d)| !d.is_empty()) {
        for (rc, rd) in reference.clone().filter(|(_, d)| !d.is_empty()) {
            let d = js_divergence(pd, rd).expect("both non-empty");
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, (pc, rc)));
            }
        }
    }
    best
}

/// Smallest divergence over all chunk pairs of two fingerprints, with the
/// chunk ids achieving it. `None` if either has no flips at all.
pub fn fingerprint_divergence(a: &Fingerprint, b: &Fingerprint) -> Option<(f64, (u32, u32))> {
    closest(
        a.chunks.iter().map(|c| (c.chunk_id, &c.distribution)),
        b.chunks.iter().map(|c| (c.chunk_id, &c.distribution)),
    )
}

/// Compares every chunk of `fp` with every chunk of every reference and
/// decides on the global minimum. Ties go to the lowest reference id.
pub fn match_fingerprints(
    fp: &Fingerprint,
    store: &ReferenceStore,
    tau: f64,
    exec: Execution,
) -> Result<MatchDecision> {
    if fp.non_empty().next().is_none() {
        return Err(Error::UndefinedInput(
            "fingerprint has no chunk with flips".into(),
        ));
    }
    let ids: Vec<ReferenceId> = store.references.keys().copied().collect();
    let per_ref = exec.map(&ids, |id| {
        closest(
            fp.chunks.iter().map(|c| (c.chunk_id, &c.distribution)),
            store.references[id].chunks.iter().map(|(&k, d)| (k, d)),
        )
    });
    let mut best: Option<(f64, (u32, u32), ReferenceId)> = None;
    let mut bridged = Vec::new();
    for (&id, found) in ids.iter().zip(per_ref) {
        let Some((d, pair)) = found else { continue };
        if d <= tau {
            bridged.push(id);
        }
        if best.is_none_or(|(b, _, _)| d < b) {
            best = Some((d, pair, id));
        }
    }
    let verdict = match best {
        Some((d, _, id)) if d <= tau => Verdict::Matched(id),
        _ => Verdict::NewDevice(store.next_id()),
    };
    Ok(MatchDecision {
        verdict,
        min_divergence: best.map(|b| b.0),
        best_pair: best.map(|b| b.1),
        tau,
        bridged,
    })
}

fn absorb(target: &mut Reference, chunks: impl IntoIterator<Item = (u32, BitFlipDistribution)>) {
    for (id, d) in chunks {
        target
            .chunks
            .entry(id)
            .and_modify(|e| *e = e.merged(&d))
            .or_insert(d);
    }
}

/// Applies a decision: extends the matched reference (collapsing every
/// bridged reference into the lowest id) or opens a new one. Returns the id
/// that now holds the fingerprint.
pub fn update_references(
    store: &mut ReferenceStore,
    fp: &Fingerprint,
    decision: &MatchDecision,
) -> ReferenceId {
    let chunks = fp
        .chunks
        .iter()
        .map(|c| (c.chunk_id, c.distribution.clone()));
    match decision.verdict {
        Verdict::NewDevice(_) => {
            let id = store.next_id();
            store.next_id += 1;
            let mut r = Reference::default();
            absorb(&mut r, chunks);
            store.references.insert(id, r);
            id
        }
        Verdict::Matched(matched) => {
            let mut group: Vec<ReferenceId> = decision
                .bridged
                .iter()
                .copied()
                .filter(|id| store.references.contains_key(id))
                .collect();
            if !group.contains(&matched) {
                group.push(matched);
            }
            group.sort();
            let into = group[0];
            for &other in &group[1..] {
                let absorbed = store.references.remove(&other).expect("present");
                let target = store.references.get_mut(&into).expect("present");
                if target.label.is_none() {
                    target.label = absorbed.label;
                }
                absorb(target, absorbed.chunks);
                store.merge_log.push(MergeEvent {
                    into,
                    absorbed: other,
                    session_id: fp.session_id,
                });
            }
            absorb(store.references.get_mut(&into).expect("present"), chunks);
            into
        }
    }
}
