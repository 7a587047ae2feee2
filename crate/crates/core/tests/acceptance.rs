//! Acceptance suite. Prints one line per criterion and exits nonzero when a
//! criterion fails that is not listed in `KNOWN_RED`.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use rowprint::addrmap::stock::{kaby_lake_1r_dual_channel, StockGeometry};
use rowprint::addrmap::{channel_safe_row_walk, ChunkHandle};
use rowprint::analysis::{required_entropy_bits, theoretical_entropy_bits};
use rowprint::dram_sim::{
    create_population, ground_truth_distribution, hammer_execute, AggressorPair, Environment,
    PopulationSpec,
};
use rowprint::hammering::{
    extract_distribution, hammering_sweep, BitFlipDistribution, SweepConfig,
};
use rowprint::harness::scenarios::{
    overlap_monte_carlo, run_baseline, run_freq, run_geom, run_reseat, run_stable, run_uniq,
};
use rowprint::harness::{run_scenario, ScenarioConfig, ScenarioKind};
use rowprint::matching::{js_divergence, overlap_probability, required_sample_size};
use rowprint::rng::SeedStream;
use rowprint::templating::{fuzz_patterns, FuzzConfig, HammeringPattern};
use rowprint::Execution;

/// Criteria whose pinned check cannot be met as stated, with the reason.
const KNOWN_RED: &[(u32, &str)] = &[(
    2,
    "the product formula gives P(512, 64) = 0.999895, 9.5e-5 from the pinned 0.9998",
)];

type Check = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn binomial(n: u64, k: u64) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

fn c1_entropy() -> Check {
    let a = theoretical_entropy_bits(65_536, 5).map_err(err)?;
    let b = theoretical_entropy_bits(524_288, 4).map_err(err)?;
    let r = required_entropy_bits(1e18).map_err(err)?;
    let oa = binomial(65_536, 5).to_f64().unwrap().log2();
    let ob = binomial(524_288, 4).to_f64().unwrap().log2();
    ensure((72.5..=73.5).contains(&a), format!("H(65536,5) = {a}"))?;
    ensure((70.9..=71.9).contains(&b), format!("H(524288,4) = {b}"))?;
    ensure(
        (a - oa).abs() < 1e-9 && (b - ob).abs() < 1e-9,
        "disagrees with exact binomial",
    )?;
    ensure((r - 59.79).abs() <= 0.01, format!("required(1e18) = {r}"))?;
    ensure(
        (r - 18.0 * 10f64.log2()).abs() < 1e-9,
        "required bits != log2(P)",
    )?;
    Ok(format!(
        "H(65536,5)={a:.4} H(524288,4)={b:.4} required(1e18)={r:.4}"
    ))
}

/// Minimal d with C(n-s, d) / C(n, d) <= 1 - target, target = num/den.
fn exact_sample_size(n: u64, s: u64, num: u64, den: u64) -> u64 {
    let (mut miss_n, mut miss_d) = (BigUint::one(), BigUint::one());
    for d in 1..=n - s + 1 {
        let i = d - 1;
        miss_n *= BigUint::from(n - s - i);
        miss_d *= BigUint::from(n - i);
        if &miss_n * den <= &miss_d * (den - num) {
            return d;
        }
    }
    unreachable!()
}

fn exact_overlap(n: u64, d: u64) -> f64 {
    let (mut num, mut den) = (BigUint::one(), BigUint::one());
    for i in 0..d {
        num *= BigUint::from(n - d - i);
        den *= BigUint::from(n - i);
    }
    // 1 - num/den at 1e-15 resolution
    let scale = BigUint::from(10u64).pow(15);
    let miss = (num * &scale / den).to_f64().unwrap() / 1e15;
    1.0 - miss
}

fn c2_birthday() -> Check {
    let n = 512u64;
    let p = overlap_probability(n, 64).map_err(err)?;
    let oracle = exact_overlap(n, 64);
    ensure((p - oracle).abs() < 1e-12, format!("{p} vs exact {oracle}"))?;

    let trials = 100_000u32;
    let mc = overlap_monte_carlo(n, 64, trials, 7, Execution::Parallel).map_err(err)?;
    ensure(
        mc.within_3_sigma(),
        format!("harness Monte-Carlo {} off", mc.estimate),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hits = 0u32;
    for _ in 0..trials {
        let a = sample(&mut rng, n as usize, 64);
        let b = sample(&mut rng, n as usize, 64);
        let mut seen = [false; 512];
        a.iter().for_each(|x| seen[x] = true);
        if b.iter().any(|x| seen[x]) {
            hits += 1;
        }
    }
    let est = hits as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    ensure(
        (est - p).abs() <= 3.0 * sigma,
        format!("Monte-Carlo {est} vs {p}"),
    )?;

    for (num, den) in [(9u64, 10u64), (99, 100), (999, 1000)] {
        let target = num as f64 / den as f64;
        let mut prev = u64::MAX;
        for s in 0..n {
            let d = match required_sample_size(n, s, target) {
                Err(rowprint::Error::Unreachable(_)) if s == 0 => u64::MAX,
                Err(e) => return Err(format!("S={s}: {e}")),
                Ok(d) => {
                    let exact = exact_sample_size(n, s, num, den);
                    ensure(
                        d == exact,
                        format!("S={s} P={target}: {d} vs exact {exact}"),
                    )?;
                    d
                }
            };
            ensure(d <= prev, format!("not monotone at S={s}"))?;
            prev = d;
        }
    }
    ensure(
        (p - 0.9998).abs() <= 5e-5,
        format!("P(512,64) = {p:.9}, pinned 0.9998 +- 5e-5"),
    )?;
    Ok(format!("P(512,64)={p:.6} MC={est:.5} sigma={sigma:.2e}"))
}

fn random_distribution(rng: &mut ChaCha8Rng, offset: u32) -> BitFlipDistribution {
    let len = rng.random_range(1..40);
    let mut counts: Vec<(u32, u32)> = (0..len)
        .map(|_| (offset + rng.random_range(0..200), rng.random_range(1..50)))
        .collect();
    counts.sort();
    counts.dedup_by_key(|c| c.0);
    BitFlipDistribution::from_sorted_counts(counts).unwrap()
}

fn c3_jsd() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_self = 0f64;
    for _ in 0..1000 {
        let p = random_distribution(&mut rng, 0);
        let q = random_distribution(&mut rng, 0);
        let far = random_distribution(&mut rng, 1_000);
        let pq = js_divergence(&p, &q).map_err(err)?;
        let qp = js_divergence(&q, &p).map_err(err)?;
        ensure(
            pq.to_bits() == qp.to_bits(),
            format!("asymmetric: {pq} vs {qp}"),
        )?;
        ensure(
            (-1e-12..=1.0 + 1e-12).contains(&pq),
            format!("out of range: {pq}"),
        )?;
        let pp = js_divergence(&p, &p).map_err(err)?;
        max_self = max_self.max(pp.abs());
        ensure(pp.abs() <= 1e-12, format!("JSD(P,P) = {pp}"))?;
        let d = js_divergence(&p, &far).map_err(err)?;
        ensure((d - 1.0).abs() <= 1e-12, format!("disjoint JSD = {d}"))?;
    }
    Ok(format!("1000 pairs, max |JSD(P,P)| = {max_self:.1e}"))
}

fn c4_uniqueness() -> Check {
    let mut worst = (0f64, 1f64);
    for seed in 1..=5 {
        let mut cfg = ScenarioConfig::new(ScenarioKind::Uniq);
        cfg.seed = seed;
        let r = run_uniq(&cfg).map_err(err)?;
        ensure(
            r.devices == 36 && r.failures.is_empty(),
            "incomplete population",
        )?;
        ensure(
            r.sweep.perfect_separation,
            format!(
                "seed {seed}: max same {} >= min cross {}",
                r.sweep.max_same, r.sweep.min_cross
            ),
        )?;
        ensure(
            r.metrics.accuracy == 1.0,
            format!("seed {seed}: accuracy {}", r.metrics.accuracy),
        )?;
        worst = (
            worst.0.max(r.sweep.max_same),
            worst.1.min(r.sweep.min_cross),
        );
    }
    Ok(format!(
        "5 seeds, max same {:.4} < min cross {:.4}",
        worst.0, worst.1
    ))
}

fn c5_stability() -> Check {
    let cfg = ScenarioConfig::new(ScenarioKind::Stable);
    let s = run_stable(&cfg).map_err(err)?;
    ensure(s.sessions.len() == 10, "expected 10 sessions")?;
    let first = s.sessions[0].recall;
    for (i, m) in s.sessions.iter().enumerate() {
        ensure(
            m.recall >= first - 0.02,
            format!("session {} recall {}", i + 1, m.recall),
        )?;
    }
    let cfg = ScenarioConfig::new(ScenarioKind::Reseat);
    let r = run_reseat(&cfg).map_err(err)?;
    ensure(
        r.reseated.recall < r.baseline.recall,
        format!(
            "reseat recall {} vs {}",
            r.reseated.recall, r.baseline.recall
        ),
    )?;
    Ok(format!(
        "session-1 recall {first:.3}, min {:.3}; reseat {:.3} < no-reseat {:.3}",
        s.sessions.iter().map(|m| m.recall).fold(1.0, f64::min),
        r.reseated.recall,
        r.baseline.recall
    ))
}

fn c6_frequency() -> Check {
    let cfg = ScenarioConfig::new(ScenarioKind::Freq);
    let r = run_freq(&cfg).map_err(err)?;
    let ratio = r.high.expected_nominal / r.high.expected_probe;
    ensure(
        (ratio / 100.0 - 1.0).abs() < 0.05,
        format!("flip ratio {ratio}"),
    )?;
    ensure(
        r.high.metrics.recall >= 0.7,
        format!("high-flip recall {}", r.high.metrics.recall),
    )?;
    ensure(
        r.low.metrics.recall < 0.2,
        format!("low-flip recall {}", r.low.metrics.recall),
    )?;
    Ok(format!(
        "scale {:.3e} ({ratio:.1}x fewer flips): high {:.3}, low {:.3}",
        r.activation_scale, r.high.metrics.recall, r.low.metrics.recall
    ))
}

fn c7_baseline() -> Check {
    let cfg = ScenarioConfig::new(ScenarioKind::Baseline);
    let r = run_baseline(&cfg).map_err(err)?;
    let gap = r.jsd.recall - r.jaccard.recall;
    ensure(gap >= 0.2, format!("gap {gap}"))?;
    Ok(format!(
        "JSD {:.3} vs Jaccard {:.3}",
        r.jsd.recall, r.jaccard.recall
    ))
}

fn c8_geometry() -> Check {
    let mut cfg = ScenarioConfig::new(ScenarioKind::Geom);
    cfg.geom.runs = 100;
    let r = run_geom(&cfg).map_err(err)?;
    ensure(r.failures.is_empty(), r.failures.join("; "))?;
    for o in &r.clean {
        let label = o.truth.label();
        if o.truth == StockGeometry::R2x16 {
            ensure(
                o.ambiguous && o.labels == ["2Rx16", "1Rx8"],
                format!("2Rx16 -> {:?}", o.labels),
            )?;
        } else {
            ensure(o.exact(), format!("{label} -> {:?}", o.labels))?;
        }
    }
    for s in StockGeometry::ALL {
        let runs: Vec<_> = r.jittered.iter().filter(|o| o.truth == s).collect();
        ensure(
            runs.len() == 100,
            format!("{} runs for {}", runs.len(), s.label()),
        )?;
        ensure(
            runs.iter().all(|o| o.correct_or_flagged()),
            format!("{} misread", s.label()),
        )?;
    }
    Ok("3 exact + {2Rx16, 1Rx8} flagged; 400/400 jittered correct-or-flagged".into())
}

fn c9_roundtrip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for s in StockGeometry::ALL {
        let m = s.mapping();
        let width = m.address_width();
        for _ in 0..100_000 {
            let a = rng.random::<u64>() & ((1u64 << width) - 1);
            let back = m.compose(&m.decompose(a).map_err(err)?).map_err(err)?;
            ensure(back == a, format!("{}: {a:#x} -> {back:#x}", s.label()))?;
        }
    }
    let m = kaby_lake_1r_dual_channel();
    for _ in 0..1_000 {
        let chunk = ChunkHandle::from_index(rng.random_range(0..4096));
        let ch = m.decompose(chunk.base()).map_err(err)?.channel;
        for a in channel_safe_row_walk(chunk, &m).map_err(err)? {
            ensure(
                m.decompose(a).map_err(err)?.channel == ch,
                format!("{a:#x} left channel"),
            )?;
        }
    }
    Ok("4 x 1e5 addresses; 1000 dual-channel walks".into())
}

fn c10_estimator() -> Check {
    let s = StockGeometry::R2x8;
    let devices = create_population(&PopulationSpec::new(4, s.geometry()), 10).map_err(err)?;
    let mapping = s.mapping();
    let pattern = HammeringPattern::with_decoys(4, 1);
    let env = Environment::default();
    let mut means = Vec::new();
    for repeats in [2u32, 8, 32] {
        let mut total = 0.0;
        for i in 0..20u64 {
            let device = &devices[(i % 4) as usize];
            let chunk = ChunkHandle::from_index(7 * i as u32 + 3);
            let config = SweepConfig {
                repeats,
                activations: 1_000_000,
                ..SweepConfig::default()
            };
            let truth = ground_truth_distribution(device, &mapping, chunk, &pattern, &config, &env)
                .map_err(err)?;
            let obs = hammering_sweep(
                device,
                &mapping,
                chunk,
                &pattern,
                &config,
                &env,
                SeedStream::new(100 + i),
            )
            .map_err(err)?;
            total += js_divergence(&extract_distribution(&obs), &truth).map_err(err)?;
        }
        means.push(total / 20.0);
    }
    ensure(
        means[0] > means[1] && means[1] > means[2],
        format!("mean JSD {means:?}"),
    )?;
    Ok(format!(
        "mean JSD R=2 {:.4}, R=8 {:.4}, R=32 {:.4}",
        means[0], means[1], means[2]
    ))
}

fn c11_trr() -> Check {
    let s = StockGeometry::R1x8;
    let devices = create_population(&PopulationSpec::new(4, s.geometry()), 11).map_err(err)?;
    let plain = HammeringPattern::double_sided();
    let env = Environment::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in 0..10_000u64 {
        let d = &devices[(t % 4) as usize];
        ensure(d.trr.enabled, "TRR disabled")?;
        let pair =
            AggressorPair::double_sided(0, rng.random_range(0..16), rng.random_range(1..65_000));
        let flips =
            hammer_execute(d, &plain, pair, 10_000_000, &env, SeedStream::new(t)).map_err(err)?;
        ensure(
            flips.is_empty(),
            format!("trial {t}: {} flips", flips.len()),
        )?;
    }
    let patterns = fuzz_patterns(
        &devices,
        500,
        11,
        &FuzzConfig::default(),
        Execution::Parallel,
    );
    ensure(!patterns.is_empty(), "fuzzer found nothing")?;
    let trr = devices[0].trr;
    ensure(
        patterns.iter().all(|p| p.evades(&trr)),
        "pattern breaks the decoy rule",
    )?;
    Ok(format!(
        "0 flips in 1e4 trials; {} patterns from 500 candidates",
        patterns.len()
    ))
}

fn bundle_hash(cfg: &ScenarioConfig) -> Result<[u8; 32], String> {
    let b = run_scenario(cfg).map_err(err)?;
    let mut h = Sha256::new();
    for t in &b.tables {
        h.update(t.name.as_bytes());
        h.update(t.to_csv().map_err(err)?.as_bytes());
    }
    Ok(h.finalize().into())
}

fn c12_reproducibility() -> Check {
    for kind in ScenarioKind::ALL {
        let cfg = ScenarioConfig::new(kind);
        let a = bundle_hash(&cfg)?;
        let b = bundle_hash(&cfg)?;
        ensure(a == b, format!("{kind}: rerun differs"))?;
    }
    let mut cfg = ScenarioConfig::new(ScenarioKind::Uniq);
    let a = bundle_hash(&cfg)?;
    cfg.execution = Execution::Sequential;
    ensure(
        bundle_hash(&cfg)? == a,
        "sequential run differs from parallel",
    )?;
    Ok("9 scenarios rerun byte-identical; sequential == parallel".into())
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "entropy math", Duration::from_secs(1), c1_entropy),
        (2, "birthday math", Duration::from_secs(30), c2_birthday),
        (3, "JSD axioms", Duration::from_secs(5), c3_jsd),
        (4, "uniqueness", Duration::from_secs(120), c4_uniqueness),
        (
            5,
            "stability and reseat",
            Duration::from_secs(180),
            c5_stability,
        ),
        (
            6,
            "frequency robustness",
            Duration::from_secs(180),
            c6_frequency,
        ),
        (
            7,
            "baseline comparison",
            Duration::from_secs(180),
            c7_baseline,
        ),
        (
            8,
            "geometry inference",
            Duration::from_secs(10),
            c8_geometry,
        ),
        (
            9,
            "address-map round trip",
            Duration::from_secs(5),
            c9_roundtrip,
        ),
        (
            10,
            "estimator consistency",
            Duration::from_secs(60),
            c10_estimator,
        ),
        (11, "TRR guarantee", Duration::from_secs(30), c11_trr),
        (12, "reproducibility", Duration::MAX, c12_reproducibility),
    ];
    let mut unexpected = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run().and_then(|detail| {
            let t = start.elapsed();
            if t > budget {
                Err(format!("{detail}; took {t:.1?}, budget {budget:.0?}"))
            } else {
                Ok(detail)
            }
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS {name} [{t:.2?}] {detail}"),
            Err(why) => match KNOWN_RED.iter().find(|k| k.0 == id) {
                Some((_, note)) => {
                    println!("criterion {id:>2} FAIL {name} [{t:.2?}] {why} (known: {note})")
                }
                None => {
                    unexpected += 1;
                    println!("criterion {id:>2} FAIL {name} [{t:.2?}] {why}");
                }
            },
        }
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
