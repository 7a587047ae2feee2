//! Geometry inference, chunk-overlap curves and entropy curves.

use serde_json::json;

use crate::addrmap::stock::StockGeometry;
use crate::addrmap::{infer_geometry, GeometryCandidate, InferenceConfig, TimingOracle};
use crate::analysis::{
    empirical_entropy, required_entropy_bits, theoretical_entropy_bits, EmpiricalEntropy,
};
use crate::dram_sim::create_population;
use crate::dram_sim::Environment;
use crate::error::Result;
use crate::hammering::{sample_chunks, SessionConfig};
use crate::harness::bundle::{fmt_f, ResultBundle, Table};
use crate::harness::config::ScenarioConfig;
use crate::harness::pipeline::{run_sessions, template, SessionPlan};
use crate::matching::{overlap_probability, reference_overlap_probability, required_sample_size};
use crate::rng::{mix, tag, SeedStream};

#[derive(Debug, Clone)]
pub struct GeomOutcome {
    pub truth: StockGeometry,
    pub jitter: f64,
    pub seed: u64,
    pub labels: Vec<String>,
    pub ambiguous: bool,
}

impl GeomOutcome {
    pub fn exact(&self) -> bool {
        !self.ambiguous && self.labels.first().map(String::as_str) == Some(self.truth.label())
    }

    pub fn correct_or_flagged(&self) -> bool {
        self.labels.first().map(String::as_str) == Some(self.truth.label())
            || (self.ambiguous && self.labels.iter().any(|l| l == self.truth.label()))
    }
}

#[derive(Debug, Clone)]
pub struct GeomReport {
    /// Zero-jitter run per stock geometry.
    pub clean: Vec<GeomOutcome>,
    pub jittered: Vec<GeomOutcome>,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

pub fn run_geom(cfg: &ScenarioConfig) -> Result<GeomReport> {
    let candidates = GeometryCandidate::stock();
    let inference = InferenceConfig::default();
    let mut failures = Vec::new();
    let mut run = |truth: StockGeometry, jitter: f64, seed: u64| -> Option<GeomOutcome> {
        let oracle = TimingOracle::new(truth.mapping(), seed).with_jitter(jitter);
        match infer_geometry(&oracle, &candidates, &inference) {
            Ok(r) => Some(GeomOutcome {
                truth,
                jitter,
                seed,
                labels: r.labels,
                ambiguous: r.ambiguous,
            }),
            Err(e) => {
                failures.push(format!("{} seed {seed}: {e}", truth.label()));
                None
            }
        }
    };
    let mut clean = Vec::new();
    let mut jittered = Vec::new();
    for truth in StockGeometry::ALL {
        clean.extend(run(truth, 0.0, cfg.seed));
        for r in 0..cfg.geom.runs {
            jittered.extend(run(truth, cfg.geom.jitter, mix(cfg.seed, r as u64)));
        }
    }
    let mut table = Table::new(
        "geometry",
        &[
            "truth",
            "jitter",
            "seed",
            "inferred",
            "ambiguous",
            "exact",
            "correct_or_flagged",
        ],
    );
    for o in clean.iter().chain(&jittered) {
        table.push(vec![
            o.truth.label().to_string(),
            fmt_f(o.jitter),
            o.seed.to_string(),
            o.labels.join("|"),
            o.ambiguous.to_string(),
            o.exact().to_string(),
            o.correct_or_flagged().to_string(),
        ]);
    }
    Ok(GeomReport {
        clean,
        jittered,
        tables: vec![table],
        failures,
    })
}

impl GeomReport {
    pub fn bundle(&self) -> ResultBundle {
        ResultBundle {
            records: Vec::new(),
            scenario: "geom".into(),
            tables: self.tables.clone(),
            summary: json!({
                "exact": self.clean.iter().filter(|o| o.exact()).map(|o| o.truth.label()).collect::<Vec<_>>(),
                "ambiguous": self.clean.iter().filter(|o| o.ambiguous).map(|o| o.labels.clone()).collect::<Vec<_>>(),
                "jittered_runs": self.jittered.len(),
                "jittered_correct_or_flagged": self.jittered.iter().filter(|o| o.correct_or_flagged()).count(),
            }),
            failures: self.failures.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloPoint {
    pub d: u64,
    pub exact: f64,
    pub estimate: f64,
    pub sigma: f64,
}

impl MonteCarloPoint {
    pub fn within_3_sigma(&self) -> bool {
        (self.estimate - self.exact).abs() <= 3.0 * self.sigma.max(f64::EPSILON)
    }
}

/// Fraction of `trials` session pairs that share a chunk.
pub fn overlap_monte_carlo(
    n: u64,
    d: u64,
    trials: u32,
    seed: u64,
    exec: crate::Execution,
) -> Result<MonteCarloPoint> {
    let exact = overlap_probability(n, d)?;
    let root = SeedStream::new(seed).fork(tag::MONTE_CARLO).fork(d);
    const BLOCK: u32 = 1_000;
    let blocks = trials.div_ceil(BLOCK);
    let hits: Vec<Result<u64>> = exec.map_range(blocks as usize, |b| {
        let mut hits = 0u64;
        let start = b as u32 * BLOCK;
        for t in start..(start + BLOCK).min(trials) {
            let s = root.fork(t as u64);
            let a = sample_chunks(n as u32, d as u32, s.fork(0).0)?;
            let c = sample_chunks(n as u32, d as u32, s.fork(1).0)?;
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < c.len() {
                match a[i].cmp(&c[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        hits += 1;
                        break;
                    }
                }
            }
        }
        Ok(hits)
    });
    let total: u64 = hits.into_iter().sum::<Result<u64>>()?;
    let estimate = total as f64 / trials as f64;
    Ok(MonteCarloPoint {
        d,
        exact,
        estimate,
        sigma: (exact * (1.0 - exact) / trials as f64).sqrt(),
    })
}

#[derive(Debug, Clone)]
pub struct BirthdayReport {
    pub overlap: Vec<(u64, f64)>,
    pub monte_carlo: Vec<MonteCarloPoint>,
    /// (target, reference size, chunks to sample).
    pub sample_sizes: Vec<(f64, u64, u64)>,
    pub tables: Vec<Table>,
}

pub fn run_birthday(cfg: &ScenarioConfig) -> Result<BirthdayReport> {
    let b = &cfg.birthday;
    let n = b.total_chunks;
    let overlap: Vec<(u64, f64)> = (1..=n)
        .map(|d| overlap_probability(n, d).map(|p| (d, p)))
        .collect::<Result<_>>()?;
    let monte_carlo: Vec<MonteCarloPoint> = b
        .monte_carlo_sizes
        .iter()
        .map(|&d| overlap_monte_carlo(n, d, b.monte_carlo_trials, cfg.seed, cfg.execution))
        .collect::<Result<_>>()?;
    let mut sample_sizes = Vec::new();
    for &target in &b.targets {
        for s in 1..n {
            sample_sizes.push((target, s, required_sample_size(n, s, target)?));
        }
    }
    let mut t_overlap = Table::new("overlap", &["chunks_per_session", "probability"]);
    for &(d, p) in &overlap {
        t_overlap.push(vec![d.to_string(), fmt_f(p)]);
    }
    let mut t_mc = Table::new(
        "overlap_monte_carlo",
        &[
            "chunks_per_session",
            "exact",
            "monte_carlo",
            "sigma",
            "within_3_sigma",
        ],
    );
    for m in &monte_carlo {
        t_mc.push(vec![
            m.d.to_string(),
            fmt_f(m.exact),
            fmt_f(m.estimate),
            fmt_f(m.sigma),
            m.within_3_sigma().to_string(),
        ]);
    }
    let mut t_size = Table::new(
        "sample_size",
        &["target", "reference_chunks", "chunks_to_sample", "achieved"],
    );
    for &(target, s, d) in &sample_sizes {
        t_size.push(vec![
            fmt_f(target),
            s.to_string(),
            d.to_string(),
            fmt_f(reference_overlap_probability(n, s, d)?),
        ]);
    }
    Ok(BirthdayReport {
        overlap,
        monte_carlo,
        sample_sizes,
        tables: vec![t_overlap, t_mc, t_size],
    })
}

impl BirthdayReport {
    pub fn bundle(&self, cfg: &ScenarioConfig) -> ResultBundle {
        let at = |d: u64| self.overlap.iter().find(|o| o.0 == d).map(|o| o.1);
        ResultBundle {
            records: Vec::new(),
            scenario: "birthday".into(),
            tables: self.tables.clone(),
            summary: json!({
                "total_chunks": cfg.birthday.total_chunks,
                "overlap_at_64": at(64),
                "monte_carlo_within_3_sigma": self.monte_carlo.iter().all(MonteCarloPoint::within_3_sigma),
            }),
            failures: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EntropyReport {
    /// (cells, flips, bits).
    pub theoretical: Vec<(u64, u64, f64)>,
    /// (population, bits).
    pub required: Vec<(f64, f64)>,
    pub empirical: EmpiricalEntropy,
    pub mean_flips_per_chunk: f64,
    pub chunks_with_flips: f64,
    pub tables: Vec<Table>,
    pub failures: Vec<String>,
}

pub fn run_entropy(cfg: &ScenarioConfig) -> Result<EntropyReport> {
    let e = &cfg.entropy;
    let mut theoretical = Vec::new();
    for &n in &e.region_cells {
        for k in 1..=e.max_flips.min(n) {
            theoretical.push((n, k, theoretical_entropy_bits(n, k)?));
        }
    }
    let required: Vec<(f64, f64)> = e
        .populations
        .iter()
        .map(|&p| required_entropy_bits(p).map(|b| (p, b)))
        .collect::<Result<_>>()?;

    // corpus: one sweep over every chunk of every session
    let devices = create_population(&cfg.population.spec(), cfg.seed)?;
    let pattern = template(cfg)?.selected().clone();
    let mut session: SessionConfig = cfg.session.session();
    session.sweep.repeats = 1;
    let plan = SessionPlan {
        pattern: &pattern,
        session,
        env: Environment::default(),
        seed: mix(cfg.seed, 501),
    };
    let mut failures = Vec::new();
    let mut sets: Vec<Vec<u32>> = Vec::new();
    for (d, r) in devices.iter().zip(run_sessions(&devices, cfg, &plan)) {
        match r {
            Ok(s) => sets.extend(s.observations.iter().map(|o| {
                o.sweeps[0]
                    .indices()
                    .map(|i| i as u32)
                    .collect::<Vec<u32>>()
            })),
            Err(err) => failures.push(format!("device {}: {err}", d.id)),
        }
    }
    let empirical = empirical_entropy(&sets)?;
    let mean_flips = sets.iter().map(Vec::len).sum::<usize>() as f64 / sets.len() as f64;
    let with_flips = sets.iter().filter(|s| !s.is_empty()).count() as f64 / sets.len() as f64;

    let mut t_theory = Table::new("theoretical", &["cells", "flips", "bits"]);
    for &(n, k, b) in &theoretical {
        t_theory.push(vec![n.to_string(), k.to_string(), fmt_f(b)]);
    }
    let mut t_req = Table::new("required", &["population", "bits"]);
    for &(p, b) in &required {
        t_req.push(vec![format!("{p:e}"), fmt_f(b)]);
    }
    let mut t_emp = Table::new(
        "empirical",
        &[
            "chunks",
            "distinct_sets",
            "bits",
            "normalized",
            "mean_flips_per_chunk",
            "chunks_with_flips",
        ],
    );
    t_emp.push(vec![
        empirical.chunks.to_string(),
        empirical.distinct_sets.to_string(),
        fmt_f(empirical.bits),
        fmt_f(empirical.normalized),
        fmt_f(mean_flips),
        fmt_f(with_flips),
    ]);
    Ok(EntropyReport {
        theoretical,
        required,
        empirical,
        mean_flips_per_chunk: mean_flips,
        chunks_with_flips: with_flips,
        tables: vec![t_theory, t_req, t_emp],
        failures,
    })
}

impl EntropyReport {
    pub fn bundle(&self) -> ResultBundle {
        ResultBundle {
            records: Vec::new(),
            scenario: "entropy".into(),
            tables: self.tables.clone(),
            summary: json!({
                "chunks": self.empirical.chunks,
                "empirical_bits": self.empirical.bits,
                "normalized": self.empirical.normalized,
                "mean_flips_per_chunk": self.mean_flips_per_chunk,
                "chunks_with_flips": self.chunks_with_flips,
            }),
            failures: self.failures.clone(),
        }
    }
}
