//! Frequency-shift robustness and the Jaccard baseline.

use serde_json::json;

use crate::addrmap::ChunkHandle;
use crate::analysis::{classification_metrics, jaccard, Confusion, LabeledDecision, MetricsReport};
use crate::dram_sim::{create_population, expected_sweep_flips, DimmDevice, Environment};
use crate::error::Result;
use crate::hammering::{session_chunks, SessionConfig};
use crate::harness::bundle::{fmt_f, ResultBundle, Table};
use crate::harness::config::ScenarioConfig;
use crate::harness::pipeline::{template, SessionPlan, Templated};
use crate::rng::mix;
use crate::templating::HammeringPattern;

use super::identify::{metrics_row, paired, pattern_json, with_metrics, Paired};

const REFERENCE_SALT: u64 = 301;
const PROBE_SALT: u64 = 401;

/// Expected flips of one sweep summed over the first chunks of `devices`.
pub fn expected_flips(
    cfg: &ScenarioConfig,
    devices: &[DimmDevice],
    pattern: &HammeringPattern,
    session: &SessionConfig,
    scale: f64,
) -> Result<f64> {
    let mapping = cfg.population.mapping();
    let env = Environment::scaled(scale)?;
    let mut total = 0.0;
    for d in devices {
        for id in session_chunks(d, session, mix(cfg.seed, REFERENCE_SALT))?
            .into_iter()
            .take(2)
        {
            total += expected_sweep_flips(
                d,
                &mapping,
                ChunkHandle::from_index(id),
                pattern,
                &session.sweep,
                &env,
            )?;
        }
    }
    Ok(total)
}

/// Activation scale at which expected flips drop by `ratio`.
pub fn calibrate_scale(
    cfg: &ScenarioConfig,
    devices: &[DimmDevice],
    pattern: &HammeringPattern,
    session: &SessionConfig,
    ratio: f64,
) -> Result<f64> {
    let nominal = expected_flips(cfg, devices, pattern, session, 1.0)?;
    if nominal == 0.0 || ratio <= 1.0 {
        return Ok(1.0);
    }
    let goal = nominal / ratio;
    let (mut lo, mut hi) = ((1e-9f64).ln(), 0.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_flips(cfg, devices, pattern, session, mid.exp())? < goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Debug, Clone)]
pub struct FreqArm {
    pub label: &'static str,
    pub pattern: HammeringPattern,
    pub expected_nominal: f64,
    pub expected_probe: f64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct FreqReport {
    pub activation_scale: f64,
    pub high: FreqArm,
    pub low: FreqArm,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

struct ShiftSetup {
    devices: Vec<DimmDevice>,
    templated: Templated,
    reference: SessionConfig,
    probe: SessionConfig,
    scale: f64,
}

fn setup(cfg: &ScenarioConfig) -> Result<ShiftSetup> {
    let devices = create_population(&cfg.population.spec(), cfg.seed)?;
    let templated = template(cfg)?;
    let mut reference = cfg.session.session();
    reference.sweep.repeats = cfg.freq.reference_repeats;
    let mut probe = reference.clone();
    probe.sweep.repeats = cfg.freq.probe_repeats;
    let high = &templated.patterns[templated.high_flip().pattern_index];
    let k = (cfg.freq.calibration_devices as usize).min(devices.len());
    let scale = match cfg.freq.activation_scale {
        Some(s) => s,
        None => calibrate_scale(cfg, &devices[..k], high, &reference, cfg.freq.flip_ratio)?,
    };
    log::info!("probe activation scale {scale:.6}");
    Ok(ShiftSetup {
        devices,
        templated,
        reference,
        probe,
        scale,
    })
}

fn shifted_run(cfg: &ScenarioConfig, s: &ShiftSetup, pattern: &HammeringPattern) -> Result<Paired> {
    paired(
        cfg,
        &s.devices,
        &s.devices,
        &SessionPlan {
            pattern,
            session: s.reference.clone(),
            env: Environment::default(),
            seed: mix(cfg.seed, REFERENCE_SALT),
        },
        &SessionPlan {
            pattern,
            session: s.probe.clone(),
            env: Environment::scaled(s.scale)?,
            seed: mix(cfg.seed, PROBE_SALT),
        },
    )
}

pub fn run_freq(cfg: &ScenarioConfig) -> Result<FreqReport> {
    let s = setup(cfg)?;
    let k = (cfg.freq.calibration_devices as usize).min(s.devices.len());
    let mut failures = Vec::new();
    let mut arms = Vec::new();
    for (label, score) in [
        ("high_flip", s.templated.high_flip()),
        ("low_flip", s.templated.low_flip()),
    ] {
        let pattern = s.templated.patterns[score.pattern_index].clone();
        let mut p = shifted_run(cfg, &s, &pattern)?;
        failures.append(&mut p.failures);
        arms.push(FreqArm {
            label,
            expected_nominal: expected_flips(cfg, &s.devices[..k], &pattern, &s.reference, 1.0)?,
            expected_probe: expected_flips(cfg, &s.devices[..k], &pattern, &s.reference, s.scale)?,
            metrics: classification_metrics(&p.round.decisions, cfg.tau, "freq")?,
            pattern,
        });
    }
    let mut table = Table::new(
        "freq",
        &with_metrics(&[
            "pattern",
            "secondary_count",
            "amplitude",
            "activation_scale",
            "expected_flips_nominal",
            "expected_flips_probe",
        ]),
    );
    for a in &arms {
        let mut row = vec![
            a.label.to_string(),
            a.pattern.secondary_slot_count().to_string(),
            a.pattern.amplitude().to_string(),
            fmt_f(s.scale),
            fmt_f(a.expected_nominal),
            fmt_f(a.expected_probe),
        ];
        row.extend(metrics_row(&a.metrics));
        table.push(row);
    }
    let low = arms.pop().expect("two arms");
    let high = arms.pop().expect("two arms");
    Ok(FreqReport {
        activation_scale: s.scale,
        high,
        low,
        tables: vec![table],
        failures,
    })
}

impl FreqReport {
    pub fn bundle(&self, cfg: &ScenarioConfig) -> ResultBundle {
        let arm = |a: &FreqArm| {
            json!({
                "pattern": pattern_json(&a.pattern),
                "expected_flips_nominal": a.expected_nominal,
                "expected_flips_probe": a.expected_probe,
                "recall": a.metrics.recall,
                "precision": a.metrics.precision,
            })
        };
        ResultBundle {
            records: Vec::new(),
            scenario: "freq".into(),
            tables: self.tables.clone(),
            summary: json!({
                "tau": cfg.tau,
                "activation_scale": self.activation_scale,
                "high_flip": arm(&self.high),
                "low_flip": arm(&self.low),
            }),
            failures: self.failures.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub activation_scale: f64,
    pub jsd: MetricsReport,
    pub jaccard: MetricsReport,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

/// Highest Jaccard index between first sweeps over all chunk pairs.
fn best_jaccard(a: &crate::hammering::Session, b: &crate::hammering::Session) -> f64 {
    let first = |s: &crate::hammering::Session| -> Vec<Vec<u64>> {
        s.observations
            .iter()
            .map(|o| {
                o.sweeps
                    .first()
                    .map(|f| f.indices().collect())
                    .unwrap_or_default()
            })
            .collect()
    };
    let (sa, sb) = (first(a), first(b));
    let mut best = 0.0f64;
    for x in &sa {
        for y in &sb {
            if let Ok(j) = jaccard(x, y) {
                best = best.max(j);
            }
        }
    }
    best
}

pub fn run_baseline(cfg: &ScenarioConfig) -> Result<BaselineReport> {
    let s = setup(cfg)?;
    let pattern = s.templated.patterns[s.templated.high_flip().pattern_index].clone();
    let p = shifted_run(cfg, &s, &pattern)?;
    let jsd = classification_metrics(&p.round.decisions, cfg.tau, "baseline-jsd")?;
    let min_similarity = 1.0 - cfg.tau;
    let mut confusion = Confusion::default();
    for (id, probe) in p.round.devices.iter().zip(&p.round.sessions) {
        let mut best: Option<(f64, usize)> = None;
        for (j, r) in p.enrolled.sessions.iter().enumerate() {
            let sim = best_jaccard(probe, r);
            if best.is_none_or(|(b, _)| sim > b) {
                best = Some((sim, j));
            }
        }
        let predicted = best
            .filter(|&(sim, _)| sim >= min_similarity && sim > 0.0)
            .map(|(_, j)| p.enrolled.devices[j]);
        confusion.record(LabeledDecision {
            predicted,
            truth: p.enrolled.devices.contains(id).then_some(*id),
        });
    }
    let jac = MetricsReport::from_confusion(confusion, cfg.tau, "baseline-jaccard");
    let mut table = Table::new("baseline", &with_metrics(&["pipeline"]));
    for (name, m) in [("jsd", &jsd), ("jaccard_single_sweep", &jac)] {
        let mut row = vec![name.to_string()];
        row.extend(metrics_row(m));
        table.push(row);
    }
    Ok(BaselineReport {
        activation_scale: s.scale,
        jsd,
        jaccard: jac,
        tables: vec![table],
        failures: p.failures,
    })
}

impl BaselineReport {
    pub fn bundle(&self, cfg: &ScenarioConfig) -> ResultBundle {
        ResultBundle {
            records: Vec::new(),
            scenario: "baseline".into(),
            tables: self.tables.clone(),
            summary: json!({
                "tau": cfg.tau,
                "jaccard_min_similarity": 1.0 - cfg.tau,
                "activation_scale": self.activation_scale,
                "recall_jsd": self.jsd.recall,
                "recall_jaccard": self.jaccard.recall,
                "recall_gap": self.jsd.recall - self.jaccard.recall,
            }),
            failures: self.failures.clone(),
        }
    }
}
