//! Field-normalized open-access indicators over publication corpora.
//!
//! The pipeline runs in four stages, each usable on its own:
//!
//! 1. [`corpus`]: parse and validate publication records against a subject
//!    scheme and a zone registry, with a full rejection audit.
//! 2. [`counting`]: aggregate publication counts per zone and subject
//!    category using disciplinary fractional counting and geographic whole
//!    counting, into mergeable [`counting::AggregateTable`]s.
//! 3. [`indicators`]: compute open-access shares, the normalized
//!    open-access index (NOAI), and disciplinary specialization indexes.
//! 4. [`classify`] and [`export`]: class the indicator values with exact
//!    Jenks natural breaks or a symmetric manual scheme, then emit
//!    choropleth-ready CSV and GeoJSON.
//!
//! [`synth`] generates deterministic synthetic corpora for tests and
//! benchmarks, and [`numeric`] holds the shared compensated-summation and
//! formatting primitives.

pub mod classify;
pub mod corpus;
pub mod counting;
pub mod export;
pub mod indicators;
pub mod numeric;
pub mod synth;

pub use classify::{
    classify, jenks_breaks, jenks_partition, pooled_breaks, symmetric_scheme, within_class_cost,
    ClassKind, ClassScheme, ClassifyError, JenksPartition,
};
pub use corpus::{
    filter_corpus, parse_publications, Affiliation, CorpusError, DocType, IngestReport, Ingestor,
    InputFormat, OaType, PeriodSpec, PublicationRecord, RejectReason, SubjectScheme, ZoneLevel,
    ZoneRegistry,
};
pub use counting::{
    aggregate, merge, read_aggregate_csv, write_aggregate_csv, AggregateCell, AggregateTable,
    Aggregator, CountingError, GeoCounting, WORLD_ZONE,
};
pub use export::{
    choropleth_rows, emit_table, join_geojson, read_choropleth_csv, ChoroplethRow, ExportError,
    JoinReport, DEFAULT_ID_PROPERTY,
};
pub use indicators::{
    noai, oa_share, oa_share_by_discipline, specialization_index, IndicatorError, IndicatorResult,
    IndicatorRow, LabeledResult,
};
pub use numeric::{format_sig, KahanSum};
