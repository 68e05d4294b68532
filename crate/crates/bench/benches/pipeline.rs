//! Throughput benchmarks for the record pipeline: line validation,
//! aggregation, and indicator evaluation.

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use oatlas_bench::{fixture, full_span, table_of};
use oatlas_core::corpus::{Ingestor, ZoneLevel};
use oatlas_core::counting::{aggregate, GeoCounting};
use oatlas_core::indicators::{noai, oa_share};
use oatlas_core::synth::write_jsonl;
use oatlas_core::WORLD_ZONE;

fn bench_ingest(c: &mut Criterion) {
    let fx = fixture(20_000);
    let mut raw = Vec::new();
    write_jsonl(&fx.records, &mut raw).unwrap();
    let lines: Vec<&str> = std::str::from_utf8(&raw).unwrap().lines().collect();

    let mut group = c.benchmark_group("ingest");
    group.throughput(Throughput::Elements(lines.len() as u64));
    group.sample_size(20);
    group.bench_function("validate_and_absorb_20k_lines", |b| {
        b.iter(|| {
            let mut ingestor = Ingestor::new(&fx.scheme, &fx.registry);
            let mut accepted = 0u64;
            for line in &lines {
                let outcome = ingestor.validate_line(line);
                if ingestor.absorb(outcome).is_some() {
                    accepted += 1;
                }
            }
            accepted
        })
    });
    group.finish();
}

fn bench_aggregate(c: &mut Criterion) {
    let fx = fixture(20_000);
    let mut group = c.benchmark_group("aggregate");
    group.throughput(Throughput::Elements(fx.records.len() as u64));
    group.sample_size(20);
    for level in [ZoneLevel::Country, ZoneLevel::Nuts1] {
        group.bench_function(format!("whole_counting_20k_{level}"), |b| {
            b.iter(|| {
                aggregate(
                    fx.records.iter(),
                    level,
                    full_span(),
                    &fx.scheme,
                    &fx.registry,
                    GeoCounting::Whole,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_indicators(c: &mut Criterion) {
    let fx = fixture(50_000);
    let table = table_of(&fx, ZoneLevel::Nuts1);
    let zones: Vec<String> = table
        .zones()
        .map(str::to_string)
        .chain([WORLD_ZONE.to_string()])
        .collect();

    let mut group = c.benchmark_group("indicators");
    group.throughput(Throughput::Elements(zones.len() as u64));
    group.bench_function("noai_all_zones", |b| {
        b.iter(|| {
            zones
                .iter()
                .map(|zone| noai(&table, zone).unwrap().value)
                .sum::<f64>()
        })
    });
    group.bench_function("oa_share_all_zones", |b| {
        b.iter(|| {
            zones
                .iter()
                .map(|zone| oa_share(&table, zone).unwrap().value)
                .sum::<f64>()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_ingest, bench_aggregate, bench_indicators);
criterion_main!(benches);
