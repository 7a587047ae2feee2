//! Uniqueness, stability, re-seat and efficiency runs.

use serde_json::json;

use crate::analysis::{classification_metrics, threshold_sweep, MetricsReport, ThresholdSweep};
use crate::dram_sim::{create_population, DimmDevice, Environment};
use crate::error::Result;
use crate::hammering::{write_observations, ChunkObservation, RowSubset, SessionConfig};
use crate::harness::bundle::{fmt_f, RecordFile, ResultBundle, Table};
use crate::harness::config::ScenarioConfig;
use crate::harness::pipeline::{enroll, mean, probe, template, Enrolled, ProbeRound, SessionPlan};
use crate::matching::ReferenceStore;
use crate::rng::mix;
use crate::templating::HammeringPattern;

const REFERENCE_SALT: u64 = 101;
const PROBE_SALT: u64 = 201;
const RESEAT_SALT: u64 = 0x5EA7;

pub(crate) fn metrics_row(m: &MetricsReport) -> Vec<String> {
    vec![
        fmt_f(m.accuracy),
        fmt_f(m.precision),
        fmt_f(m.recall),
        m.counts.tp.to_string(),
        m.counts.fp.to_string(),
        m.counts.tn.to_string(),
        m.counts.fn_.to_string(),
    ]
}

const METRIC_COLUMNS: [&str; 7] = ["accuracy", "precision", "recall", "tp", "fp", "tn", "fn"];

pub(crate) fn with_metrics(lead: &[&str]) -> Vec<String> {
    lead.iter()
        .chain(&METRIC_COLUMNS)
        .map(|s| s.to_string())
        .collect()
}

pub(crate) fn thresholds_table(sweep: &ThresholdSweep) -> Table {
    let mut t = Table::new("thresholds", &with_metrics(&["tau"]));
    for r in &sweep.rows {
        let mut row = vec![fmt_f(r.tau)];
        row.extend(metrics_row(r));
        t.push(row);
    }
    t
}

pub(crate) fn pairs_table(round: &ProbeRound, enrolled: &Enrolled) -> Table {
    let mut t = Table::new(
        "pairs",
        &[
            "probe_device",
            "reference_device",
            "divergence",
            "same_device",
        ],
    );
    for (i, p) in round.devices.iter().enumerate() {
        for (j, r) in enrolled.devices.iter().enumerate() {
            t.push(vec![
                p.to_string(),
                r.to_string(),
                fmt_f(round.divergence[i][j]),
                (p == r).to_string(),
            ]);
        }
    }
    t
}

pub(crate) fn pattern_json(p: &HammeringPattern) -> serde_json::Value {
    json!({
        "slots": p.slots().len(),
        "secondary_slot_count": p.secondary_slot_count(),
        "amplitude": p.amplitude(),
        "frequency": p.frequency(),
        "phase": p.phase(),
    })
}

fn plan<'a>(pattern: &'a HammeringPattern, session: SessionConfig, seed: u64) -> SessionPlan<'a> {
    SessionPlan {
        pattern,
        session,
        env: Environment::default(),
        seed,
    }
}

/// Two fingerprints per module, first as reference, second as probe.
#[derive(Debug, Clone)]
pub struct UniqReport {
    pub devices: usize,
    pub sweep: ThresholdSweep,
    pub metrics: MetricsReport,
    pub same: Vec<f64>,
    pub cross: Vec<f64>,
    pub work_units: u64,
    pub pattern: HammeringPattern,
    /// Store built from the reference sessions.
    pub store: ReferenceStore,
    pub reference_observations: Vec<ChunkObservation>,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

pub(crate) struct Paired {
    pub enrolled: Enrolled,
    pub round: ProbeRound,
    pub failures: Vec<String>,
}

pub(crate) fn paired(
    cfg: &ScenarioConfig,
    reference_devices: &[DimmDevice],
    probe_devices: &[DimmDevice],
    reference: &SessionPlan<'_>,
    probe_plan: &SessionPlan<'_>,
) -> Result<Paired> {
    let mut failures = Vec::new();
    let enrolled = enroll(reference_devices, cfg, reference, &mut failures);
    let round = probe(probe_devices, &enrolled, cfg, probe_plan, &mut failures)?;
    Ok(Paired {
        enrolled,
        round,
        failures,
    })
}

pub fn run_uniq(cfg: &ScenarioConfig) -> Result<UniqReport> {
    let devices = create_population(&cfg.population.spec(), cfg.seed)?;
    let templated = template(cfg)?;
    let pattern = templated.selected().clone();
    let session = cfg.session.session();
    let p = paired(
        cfg,
        &devices,
        &devices,
        &plan(&pattern, session.clone(), mix(cfg.seed, REFERENCE_SALT)),
        &plan(&pattern, session, mix(cfg.seed, PROBE_SALT)),
    )?;
    let same = p.round.same(&p.enrolled);
    let cross = p.round.cross(&p.enrolled);
    let sweep = threshold_sweep(&same, &cross, "uniq")?;
    let metrics = classification_metrics(&p.round.decisions, cfg.tau, "uniq")?;
    let work_units = p
        .round
        .sessions
        .first()
        .map(|s| s.fingerprint.work_units)
        .unwrap_or(0);
    let mut decisions = Table::new("decisions", &["device", "predicted", "correct"]);
    for (id, d) in p.round.devices.iter().zip(&p.round.decisions) {
        decisions.push(vec![
            id.to_string(),
            d.predicted
                .map(|x| x.to_string())
                .unwrap_or_else(|| "new".into()),
            (d.predicted == d.truth).to_string(),
        ]);
    }
    let tables = vec![
        thresholds_table(&sweep),
        pairs_table(&p.round, &p.enrolled),
        decisions,
    ];
    Ok(UniqReport {
        devices: p.round.devices.len(),
        sweep,
        metrics,
        same,
        cross,
        work_units,
        pattern,
        reference_observations: p
            .enrolled
            .sessions
            .iter()
            .flat_map(|s| s.observations.iter().cloned())
            .collect(),
        store: p.enrolled.store,
        tables,
        failures: p.failures,
    })
}

impl UniqReport {
    pub fn bundle(&self) -> Result<ResultBundle> {
        let mut store = Vec::new();
        self.store.write(&mut store)?;
        let mut observations = Vec::new();
        write_observations(&mut observations, &self.reference_observations)?;
        let utf8 = |b: Vec<u8>| String::from_utf8(b).expect("records are utf-8");
        Ok(ResultBundle {
            records: vec![
                RecordFile {
                    name: "references.jsonl".into(),
                    text: utf8(store),
                },
                RecordFile {
                    name: "observations.jsonl".into(),
                    text: utf8(observations),
                },
            ],
            scenario: "uniq".into(),
            tables: self.tables.clone(),
            summary: json!({
                "devices": self.devices,
                "tau": self.metrics.tau,
                "perfect_separation": self.sweep.perfect_separation,
                "max_same_divergence": self.sweep.max_same,
                "min_cross_divergence": self.sweep.min_cross,
                "best_tau": self.sweep.best.tau,
                "best_accuracy": self.sweep.best.accuracy,
                "accuracy": self.metrics.accuracy,
                "precision": self.metrics.precision,
                "recall": self.metrics.recall,
                "work_units_per_fingerprint": self.work_units,
                "pattern": pattern_json(&self.pattern),
            }),
            failures: self.failures.clone(),
        })
    }
}

/// One enrollment followed by repeated probe sessions.
#[derive(Debug, Clone)]
pub struct StableReport {
    pub sessions: Vec<MetricsReport>,
    pub mean_same: Vec<f64>,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

pub fn run_stable(cfg: &ScenarioConfig) -> Result<StableReport> {
    let mut spec = cfg.population.spec();
    spec.count = spec.count.min(cfg.stable.devices);
    let devices = create_population(&spec, cfg.seed)?;
    let pattern = template(cfg)?.selected().clone();
    let session = cfg.session.session();
    let mut failures = Vec::new();
    let enrolled = enroll(
        &devices,
        cfg,
        &plan(&pattern, session.clone(), mix(cfg.seed, REFERENCE_SALT)),
        &mut failures,
    );
    let mut table = Table::new(
        "sessions",
        &with_metrics(&["session", "mean_same_divergence"]),
    );
    let mut sessions = Vec::new();
    let mut mean_same = Vec::new();
    for t in 0..cfg.stable.sessions {
        let round = probe(
            &devices,
            &enrolled,
            cfg,
            &plan(
                &pattern,
                session.clone(),
                mix(cfg.seed, PROBE_SALT + t as u64),
            ),
            &mut failures,
        )?;
        let m = classification_metrics(&round.decisions, cfg.tau, "stable")?;
        let ms = mean(&round.same(&enrolled));
        let mut row = vec![(t + 1).to_string(), fmt_f(ms)];
        row.extend(metrics_row(&m));
        table.push(row);
        sessions.push(m);
        mean_same.push(ms);
    }
    Ok(StableReport {
        sessions,
        mean_same,
        tables: vec![table],
        failures,
    })
}

impl StableReport {
    pub fn bundle(&self, cfg: &ScenarioConfig) -> ResultBundle {
        let recalls: Vec<f64> = self.sessions.iter().map(|m| m.recall).collect();
        let first = recalls.first().copied().unwrap_or(0.0);
        ResultBundle {
            records: Vec::new(),
            scenario: "stable".into(),
            tables: self.tables.clone(),
            summary: json!({
                "tau": cfg.tau,
                "sessions": self.sessions.len(),
                "recall_per_session": recalls,
                "non_degrading": recalls.iter().all(|&r| r >= first - 0.02),
            }),
            failures: self.failures.clone(),
        }
    }
}

/// Paired runs with and without a re-seat before the probe.
#[derive(Debug, Clone)]
pub struct ReseatReport {
    pub baseline: MetricsReport,
    pub reseated: MetricsReport,
    pub mean_same_baseline: f64,
    pub mean_same_reseated: f64,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

pub fn run_reseat(cfg: &ScenarioConfig) -> Result<ReseatReport> {
    let devices = create_population(&cfg.population.spec(), cfg.seed)?;
    let pattern = template(cfg)?.selected().clone();
    let mut session = cfg.session.session();
    session.sweep.activations = cfg.reseat.activations;
    let reseated: Vec<DimmDevice> = devices
        .iter()
        .map(|d| {
            d.reseat_with(
                cfg.reseat.perturbation,
                cfg.reseat.jitter,
                mix(mix(cfg.seed, RESEAT_SALT), d.id.0 as u64),
            )
        })
        .collect::<Result<_>>()?;
    let mut failures = Vec::new();
    let enrolled = enroll(
        &devices,
        cfg,
        &plan(&pattern, session.clone(), mix(cfg.seed, REFERENCE_SALT)),
        &mut failures,
    );
    let probe_plan = plan(&pattern, session, mix(cfg.seed, PROBE_SALT));
    let plain = probe(&devices, &enrolled, cfg, &probe_plan, &mut failures)?;
    let moved = probe(&reseated, &enrolled, cfg, &probe_plan, &mut failures)?;
    let baseline = classification_metrics(&plain.decisions, cfg.tau, "reseat")?;
    let after = classification_metrics(&moved.decisions, cfg.tau, "reseat")?;
    let (ms_plain, ms_moved) = (mean(&plain.same(&enrolled)), mean(&moved.same(&enrolled)));
    let mut table = Table::new(
        "reseat",
        &with_metrics(&["condition", "mean_same_divergence"]),
    );
    for (name, m, ms) in [
        ("no_reseat", &baseline, ms_plain),
        ("reseat", &after, ms_moved),
    ] {
        let mut row = vec![name.to_string(), fmt_f(ms)];
        row.extend(metrics_row(m));
        table.push(row);
    }
    Ok(ReseatReport {
        baseline,
        reseated: after,
        mean_same_baseline: ms_plain,
        mean_same_reseated: ms_moved,
        tables: vec![table],
        failures,
    })
}

impl ReseatReport {
    pub fn bundle(&self, cfg: &ScenarioConfig) -> ResultBundle {
        ResultBundle {
            records: Vec::new(),
            scenario: "reseat".into(),
            tables: self.tables.clone(),
            summary: json!({
                "tau": cfg.tau,
                "perturbation": cfg.reseat.perturbation,
                "jitter": cfg.reseat.jitter,
                "recall_no_reseat": self.baseline.recall,
                "recall_reseat": self.reseated.recall,
                "recall_drops": self.reseated.recall < self.baseline.recall,
            }),
            failures: self.failures.clone(),
        }
    }
}

/// One cell of the activations x repeats grid.
#[derive(Debug, Clone)]
pub struct EffCell {
    pub activations: u64,
    pub repeats: u32,
    pub half_rows: bool,
    pub work_units: u64,
    pub sweep: ThresholdSweep,
    pub at_tau: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct EffReport {
    pub cells: Vec<EffCell>,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

pub fn run_eff(cfg: &ScenarioConfig) -> Result<EffReport> {
    let devices = create_population(&cfg.population.spec(), cfg.seed)?;
    let pattern = template(cfg)?.selected().clone();
    let subsets: Vec<bool> = if cfg.eff.half_rows {
        vec![false, true]
    } else {
        vec![false]
    };
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let mut table = Table::new(
        "grid",
        &with_metrics(&[
            "activations",
            "repeats",
            "half_rows",
            "work_units",
            "best_tau",
            "best_accuracy",
            "perfect_separation",
        ]),
    );
    for &activations in &cfg.eff.activations {
        for &repeats in &cfg.eff.repeats {
            for &half in &subsets {
                let mut session = cfg.session.session();
                session.sweep.activations = activations;
                session.sweep.repeats = repeats;
                if half {
                    session.sweep.row_subset = RowSubset::FirstHalf;
                }
                let mut p = paired(
                    cfg,
                    &devices,
                    &devices,
                    &plan(&pattern, session.clone(), mix(cfg.seed, REFERENCE_SALT)),
                    &plan(&pattern, session, mix(cfg.seed, PROBE_SALT)),
                )?;
                failures.append(&mut p.failures);
                let sweep = threshold_sweep(
                    &p.round.same(&p.enrolled),
                    &p.round.cross(&p.enrolled),
                    "eff",
                )?;
                let at_tau = classification_metrics(&p.round.decisions, cfg.tau, "eff")?;
                let work_units = p
                    .round
                    .sessions
                    .first()
                    .map(|s| s.fingerprint.work_units)
                    .unwrap_or(0);
                let mut row = vec![
                    activations.to_string(),
                    repeats.to_string(),
                    half.to_string(),
                    work_units.to_string(),
                    fmt_f(sweep.best.tau),
                    fmt_f(sweep.best.accuracy),
                    sweep.perfect_separation.to_string(),
                ];
                row.extend(metrics_row(&at_tau));
                table.push(row);
                cells.push(EffCell {
                    activations,
                    repeats,
                    half_rows: half,
                    work_units,
                    sweep,
                    at_tau,
                });
            }
        }
    }
    Ok(EffReport {
        cells,
        tables: vec![table],
        failures,
    })
}

impl EffReport {
    pub fn bundle(&self, cfg: &ScenarioConfig) -> ResultBundle {
        ResultBundle {
            records: Vec::new(),
            scenario: "eff".into(),
            tables: self.tables.clone(),
            summary: json!({
                "tau": cfg.tau,
                "cells": self.cells.len(),
                "perfectly_separated_cells": self.cells.iter().filter(|c| c.sweep.perfect_separation).count(),
            }),
            failures: self.failures.clone(),
        }
    }
}
