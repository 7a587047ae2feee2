use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rowprint::addrmap::stock::StockGeometry;
use rowprint::dram_sim::{create_population, Environment, PopulationSpec};
use rowprint::hammering::{collect_session, SessionConfig};
use rowprint::matching::{match_fingerprints, ReferenceStore};
use rowprint::templating::{fuzz_patterns, FuzzConfig, HammeringPattern};
use rowprint::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench(c: &mut Criterion) {
    let s = StockGeometry::R2x8;
    let devices = create_population(&PopulationSpec::new(16, s.geometry()), 1).unwrap();
    let mapping = s.mapping();
    let pattern = HammeringPattern::with_decoys(4, 1);
    let config = SessionConfig::default();
    let env = Environment::default();

    let mut group = c.benchmark_group("session");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                collect_session(&devices[0], &mapping, &pattern, &config, &env, 7, exec).unwrap()
            })
        });
    }
    group.finish();

    let mut store = ReferenceStore::new();
    for d in &devices {
        let fp = collect_session(d, &mapping, &pattern, &config, &env, 1, Execution::Parallel)
            .unwrap()
            .fingerprint;
        store.enroll(&fp, &d.id.to_string());
    }
    let probe = collect_session(
        &devices[3],
        &mapping,
        &pattern,
        &config,
        &env,
        2,
        Execution::Parallel,
    )
    .unwrap()
    .fingerprint;
    let mut group = c.benchmark_group("match");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| match_fingerprints(black_box(&probe), &store, 0.8, exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("fuzz");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fuzz_patterns(&devices[..4], 100, 3, &FuzzConfig::default(), exec))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
