//! Steps shared by the identification scenarios: templating, paired
//! reference/probe sessions and matching.

use crate::analysis::LabeledDecision;
use crate::dram_sim::{create_population, DeviceId, DimmDevice, Environment};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hammering::{collect_session, Session, SessionConfig};
use crate::matching::{fingerprint_divergence, match_fingerprints, ReferenceStore, Verdict};
use crate::rng::mix;
use crate::templating::{
    fuzz_patterns, score_pattern, select_patterns, FuzzConfig, HammeringPattern, PatternScore,
    Selection,
};

use super::config::ScenarioConfig;

const TEMPLATING_SALT: u64 = 0x7E3A;

/// Outcome of the templating phase on the fingerprinter's own modules.
#[derive(Debug, Clone)]
pub struct Templated {
    pub patterns: Vec<HammeringPattern>,
    pub scores: Vec<PatternScore>,
    pub selection: Selection,
}

impl Templated {
    /// First pattern of the greedy selection.
    pub fn selected(&self) -> &HammeringPattern {
        &self.patterns[self.selection.patterns[0].pattern_index]
    }

    fn full_coverage(&self) -> impl Iterator<Item = &PatternScore> {
        self.scores
            .iter()
            .filter(|s| s.devices_covered == s.per_device_flips.len())
    }

    /// Full-coverage pattern with the most flips.
    pub fn high_flip(&self) -> &PatternScore {
        self.full_coverage()
            .min_by_key(|s| (std::cmp::Reverse(s.total_flips), s.pattern_index))
            .expect("selection guarantees a covering pattern")
    }

    /// Full-coverage pattern with the fewest flips.
    pub fn low_flip(&self) -> &PatternScore {
        self.full_coverage()
            .min_by_key(|s| (s.total_flips, s.pattern_index))
            .expect("selection guarantees a covering pattern")
    }
}

/// Fuzzes, scores and selects patterns on a separate templating population
/// built like the evaluated one.
pub fn template(cfg: &ScenarioConfig) -> Result<Templated> {
    let mut spec = cfg.population.spec();
    spec.count = cfg.templating.devices;
    let devices = create_population(&spec, mix(cfg.seed, TEMPLATING_SALT))?;
    let fuzz = FuzzConfig::default();
    let patterns = fuzz_patterns(
        &devices,
        cfg.templating.budget,
        mix(cfg.seed, TEMPLATING_SALT + 1),
        &fuzz,
        cfg.execution,
    );
    let scores: Vec<PatternScore> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| score_pattern(i, p, &devices, &fuzz.trial, cfg.execution))
        .collect();
    if scores.is_empty() {
        return Err(Error::Config(format!(
            "templating found no flipping pattern in {} trials",
            cfg.templating.budget
        )));
    }
    let selection = select_patterns(&scores, 1.0)?;
    if !selection.uncovered.is_empty() || selection.patterns.is_empty() {
        return Err(Error::Config(
            "templating could not cover every templating module".into(),
        ));
    }
    log::info!(
        "templating kept {} of {} candidates, selected {} pattern(s)",
        patterns.len(),
        cfg.templating.budget,
        selection.patterns.len()
    );
    Ok(Templated {
        patterns,
        scores,
        selection,
    })
}

/// How one side of a paired run is extracted.
#[derive(Debug, Clone)]
pub struct SessionPlan<'a> {
    pub pattern: &'a HammeringPattern,
    pub session: SessionConfig,
    pub env: Environment,
    pub seed: u64,
}

/// Runs one session per device; failures are reported per device.
pub fn run_sessions(
    devices: &[DimmDevice],
    cfg: &ScenarioConfig,
    plan: &SessionPlan<'_>,
) -> Vec<Result<Session>> {
    let mapping = cfg.population.mapping();
    cfg.execution.map(devices, |d| {
        collect_session(
            d,
            &mapping,
            plan.pattern,
            &plan.session,
            &plan.env,
            plan.seed,
            Execution::Sequential,
        )
    })
}

/// Reference sessions enrolled into a store, one reference per device.
pub struct Enrolled {
    pub devices: Vec<DeviceId>,
    pub sessions: Vec<Session>,
    pub store: ReferenceStore,
}

pub fn enroll(
    devices: &[DimmDevice],
    cfg: &ScenarioConfig,
    plan: &SessionPlan<'_>,
    failures: &mut Vec<String>,
) -> Enrolled {
    let mut store = ReferenceStore::new();
    let mut ids = Vec::new();
    let mut sessions = Vec::new();
    for (d, r) in devices.iter().zip(run_sessions(devices, cfg, plan)) {
        match r {
            Ok(s) => {
                store.enroll(&s.fingerprint, &d.id.to_string());
                ids.push(d.id);
                sessions.push(s);
            }
            Err(e) => failures.push(format!("device {}: enrollment failed: {e}", d.id)),
        }
    }
    Enrolled {
        devices: ids,
        sessions,
        store,
    }
}

/// Probe sessions compared against every enrolled reference.
pub struct ProbeRound {
    pub devices: Vec<DeviceId>,
    pub sessions: Vec<Session>,
    /// `divergence[i][j]`: probe `i` against reference `j`; 1.0 when either
    /// side has no flips.
    pub divergence: Vec<Vec<f64>>,
    pub decisions: Vec<LabeledDecision>,
}

impl ProbeRound {
    /// Divergences of probes to their own device's reference.
    pub fn same(&self, enrolled: &Enrolled) -> Vec<f64> {
        self.pairs(enrolled, true)
    }

    /// Divergences of probes to other devices' references.
    pub fn cross(&self, enrolled: &Enrolled) -> Vec<f64> {
        self.pairs(enrolled, false)
    }

    fn pairs(&self, enrolled: &Enrolled, same: bool) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, p) in self.devices.iter().enumerate() {
            for (j, r) in enrolled.devices.iter().enumerate() {
                if (p == r) == same {
                    out.push(self.divergence[i][j]);
                }
            }
        }
        out
    }
}

pub fn probe(
    devices: &[DimmDevice],
    enrolled: &Enrolled,
    cfg: &ScenarioConfig,
    plan: &SessionPlan<'_>,
    failures: &mut Vec<String>,
) -> Result<ProbeRound> {
    let mut ids = Vec::new();
    let mut sessions = Vec::new();
    for (d, r) in devices.iter().zip(run_sessions(devices, cfg, plan)) {
        match r {
            Ok(s) => {
                ids.push(d.id);
                sessions.push(s);
            }
            Err(e) => failures.push(format!("device {}: probe failed: {e}", d.id)),
        }
    }
    let divergence = cfg.execution.map(&sessions, |s| {
        enrolled
            .sessions
            .iter()
            .map(|r| {
                fingerprint_divergence(&s.fingerprint, &r.fingerprint)
                    .map(|(d, _)| d)
                    .unwrap_or(1.0)
            })
            .collect::<Vec<f64>>()
    });
    let mut decisions = Vec::with_capacity(sessions.len());
    for (id, s) in ids.iter().zip(&sessions) {
        let truth = enrolled.devices.contains(id).then_some(*id);
        let predicted =
            match match_fingerprints(&s.fingerprint, &enrolled.store, cfg.tau, cfg.execution) {
                Ok(d) => match d.verdict {
                    Verdict::Matched(r) => {
                        let label = enrolled.store.get(r).and_then(|r| r.label.as_deref());
                        Some(DeviceId(label.and_then(|l| l.parse().ok()).ok_or_else(
                            || Error::Config(format!("reference {r} lacks a device label")),
                        )?))
                    }
                    Verdict::NewDevice(_) => None,
                },
                Err(Error::UndefinedInput(m)) => {
                    log::warn!("device {id}: {m}; counted as a new-device verdict");
                    None
                }
                Err(e) => return Err(e),
            };
        decisions.push(LabeledDecision { predicted, truth });
    }
    Ok(ProbeRound {
        devices: ids,
        sessions,
        divergence,
        decisions,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
