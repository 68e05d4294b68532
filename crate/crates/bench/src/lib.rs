//! Shared fixtures for the pipeline benchmarks: seeded corpora and
//! pre-aggregated tables, so benches measure the stage under test rather
//! than setup.

use oatlas_core::corpus::{PeriodSpec, PublicationRecord, SubjectScheme, ZoneLevel, ZoneRegistry};
use oatlas_core::counting::{aggregate, AggregateTable, GeoCounting};
use oatlas_core::synth::{demo_registry, demo_scheme, synth_records, SynthOptions};

pub struct Fixture {
    pub scheme: SubjectScheme,
    pub registry: ZoneRegistry,
    pub records: Vec<PublicationRecord>,
}

pub fn fixture(n: usize) -> Fixture {
    let scheme = demo_scheme();
    let registry = demo_registry();
    let records = synth_records(
        &SynthOptions {
            n,
            seed: 4242,
            ..SynthOptions::default()
        },
        &scheme,
        &registry,
    );
    Fixture {
        scheme,
        registry,
        records,
    }
}

pub fn full_span() -> PeriodSpec {
    PeriodSpec::new("all", 1900, 2100).unwrap()
}

pub fn table_of(fixture: &Fixture, level: ZoneLevel) -> AggregateTable {
    aggregate(
        fixture.records.iter(),
        level,
        full_span(),
        &fixture.scheme,
        &fixture.registry,
        GeoCounting::Whole,
    )
    .unwrap()
}
