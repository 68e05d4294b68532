//! Counting engine: disciplinary fractional counting crossed with geographic
//! whole counting.
//!
//! Each publication carries a total weight of 1, split evenly over its
//! subject categories. Geographically a publication is credited in full to
//! every zone that appears among its affiliations (set semantics), and the
//! world row receives its weight exactly once no matter how many zones it
//! touches. A fractional geographic mode that divides weight across zones is
//! available as a configuration switch.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PeriodSpec, PublicationRecord, SubjectScheme, ZoneLevel, ZoneRegistry};
use crate::numeric::KahanSum;

/// Reserved zone code for world rows in serialized tables. Never a valid
/// country or NUTS1 code.
pub const WORLD_ZONE: &str = "WORLD";

/// How publication weight is distributed over zones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeoCounting {
    /// Full credit to every zone with at least one affiliation.
    #[default]
    Whole,
    /// Weight divided evenly across the distinct zones of the record.
    Fractional,
}

#[derive(Debug, Error)]
pub enum CountingError {
    #[error("unknown SC: {0}")]
    UnknownSc(String),
    #[error("incompatible tables: {0}")]
    IncompatibleTables(String),
    #[error("invalid aggregate table: {0}")]
    InvalidTable(String),
}

/// Fractional publication counts for one zone and subject category.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateCell {
    pub n: f64,
    pub n_oa: f64,
}

/// Aggregated counts for one level and period: per-zone cells keyed by
/// subject category, plus the world reference rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable {
    pub level: ZoneLevel,
    pub period: PeriodSpec,
    pub cells: BTreeMap<String, BTreeMap<String, AggregateCell>>,
    pub world: BTreeMap<String, AggregateCell>,
}

impl AggregateTable {
    pub fn empty(level: ZoneLevel, period: PeriodSpec) -> Self {
        Self {
            level,
            period,
            cells: BTreeMap::new(),
            world: BTreeMap::new(),
        }
    }

    pub fn zones(&self) -> impl Iterator<Item = &str> {
        self.cells.keys().map(String::as_str)
    }

    pub fn zone_cells(&self, zone: &str) -> Option<&BTreeMap<String, AggregateCell>> {
        self.cells.get(zone)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.world.is_empty()
    }
}

/// Weight of a record on each of its subject categories: `1 / |SCs|`.
pub fn sc_fractions(record: &PublicationRecord) -> BTreeMap<String, f64> {
    let w = 1.0 / record.subject_categories.len() as f64;
    record
        .subject_categories
        .iter()
        .map(|sc| (sc.clone(), w))
        .collect()
}

/// Weight of a record on each discipline: the sum of its SC fractions over
/// the SCs belonging to that discipline.
pub fn discipline_fractions(
    record: &PublicationRecord,
    scheme: &SubjectScheme,
) -> Result<BTreeMap<String, f64>, CountingError> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    let w = 1.0 / record.subject_categories.len() as f64;
    for sc in &record.subject_categories {
        let discipline = scheme
            .discipline_of(sc)
            .ok_or_else(|| CountingError::UnknownSc(sc.clone()))?;
        *out.entry(discipline.to_string()).or_insert(0.0) += w;
    }
    Ok(out)
}

/// Zones a record attaches to at the requested level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ZoneSet {
    pub zones: std::collections::BTreeSet<String>,
    /// True when at least one affiliation could not be resolved to a
    /// registered zone at this level.
    pub unattributable: bool,
}

/// Distinct registered zones among a record's affiliations. Each zone
/// appears once regardless of how many affiliations point at it.
pub fn zone_set(record: &PublicationRecord, level: ZoneLevel, registry: &ZoneRegistry) -> ZoneSet {
    let mut out = ZoneSet::default();
    for aff in &record.affiliations {
        let resolved = match level {
            ZoneLevel::Country => registry
                .has_country(&aff.country)
                .then(|| aff.country.clone()),
            ZoneLevel::Nuts1 => aff
                .nuts1
                .as_deref()
                .filter(|code| registry.has_region(code))
                .map(str::to_string),
        };
        match resolved {
            Some(zone) => {
                out.zones.insert(zone);
            }
            None => out.unattributable = true,
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
struct KahanCell {
    n: KahanSum,
    n_oa: KahanSum,
}

impl KahanCell {
    fn deposit(&mut self, weight: f64, open: bool) {
        self.n.add(weight);
        if open {
            self.n_oa.add(weight);
        }
    }

    fn finish(&self) -> AggregateCell {
        AggregateCell {
            n: self.n.value(),
            n_oa: self.n_oa.value(),
        }
    }
}

/// Incremental aggregation over a record stream. Compensated accumulators
/// keep per-cell sums order-stable to well under 1e-12 for corpora of
/// realistic size; the convenience [`aggregate`] wraps this for slices.
pub struct Aggregator<'a> {
    level: ZoneLevel,
    period: PeriodSpec,
    scheme: &'a SubjectScheme,
    registry: &'a ZoneRegistry,
    geo: GeoCounting,
    cells: BTreeMap<String, BTreeMap<String, KahanCell>>,
    world: BTreeMap<String, KahanCell>,
}

impl<'a> Aggregator<'a> {
    pub fn new(
        level: ZoneLevel,
        period: PeriodSpec,
        scheme: &'a SubjectScheme,
        registry: &'a ZoneRegistry,
        geo: GeoCounting,
    ) -> Self {
        Self {
            level,
            period,
            scheme,
            registry,
            geo,
            cells: BTreeMap::new(),
            world: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, record: &PublicationRecord) -> Result<(), CountingError> {
        for sc in &record.subject_categories {
            if !self.scheme.contains_sc(sc) {
                return Err(CountingError::UnknownSc(sc.clone()));
            }
        }
        let open = record.is_open();
        let w = 1.0 / record.subject_categories.len() as f64;
        let zones = zone_set(record, self.level, self.registry).zones;
        let zone_weight = match self.geo {
            GeoCounting::Whole => w,
            GeoCounting::Fractional => {
                if zones.is_empty() {
                    w
                } else {
                    w / zones.len() as f64
                }
            }
        };
        for sc in &record.subject_categories {
            // The world row sees every record exactly once, zones or not.
            self.world
                .entry(sc.clone())
                .or_default()
                .deposit(w, open);
            for zone in &zones {
                self.cells
                    .entry(zone.clone())
                    .or_default()
                    .entry(sc.clone())
                    .or_default()
                    .deposit(zone_weight, open);
            }
        }
        Ok(())
    }

    pub fn finish(self) -> AggregateTable {
        AggregateTable {
            level: self.level,
            period: self.period,
            cells: self
                .cells
                .into_iter()
                .map(|(zone, scs)| {
                    (
                        zone,
                        scs.into_iter().map(|(sc, cell)| (sc, cell.finish())).collect(),
                    )
                })
                .collect(),
            world: self
                .world
                .into_iter()
                .map(|(sc, cell)| (sc, cell.finish()))
                .collect(),
        }
    }
}

/// Aggregates an already-filtered record stream into a table for one level
/// and period.
pub fn aggregate<'a, I>(
    records: I,
    level: ZoneLevel,
    period: PeriodSpec,
    scheme: &SubjectScheme,
    registry: &ZoneRegistry,
    geo: GeoCounting,
) -> Result<AggregateTable, CountingError>
where
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    let mut agg = Aggregator::new(level, period, scheme, registry, geo);
    for record in records {
        agg.add(record)?;
    }
    Ok(agg.finish())
}

/// Component-wise sum of two tables covering the same level and period.
/// Aggregation distributes over partition: merging the aggregates of two
/// disjoint corpus halves equals aggregating the whole.
pub fn merge(a: &AggregateTable, b: &AggregateTable) -> Result<AggregateTable, CountingError> {
    if a.level != b.level || a.period.name != b.period.name {
        return Err(CountingError::IncompatibleTables(format!(
            "{}/{} vs {}/{}",
            a.level, a.period.name, b.level, b.period.name
        )));
    }
    let mut out = a.clone();
    for (zone, scs) in &b.cells {
        let target = out.cells.entry(zone.clone()).or_default();
        for (sc, cell) in scs {
            let t = target.entry(sc.clone()).or_default();
            t.n += cell.n;
            t.n_oa += cell.n_oa;
        }
    }
    for (sc, cell) in &b.world {
        let t = out.world.entry(sc.clone()).or_default();
        t.n += cell.n;
        t.n_oa += cell.n_oa;
    }
    Ok(out)
}

/// Writes a table as CSV with columns `level,period,zone,sc,n,n_oa`. World
/// rows use the reserved zone code and come first; zone rows follow in
/// lexicographic order. Counts use the shortest round-trip float notation.
pub fn write_aggregate_csv<W: std::io::Write>(
    table: &AggregateTable,
    writer: W,
) -> Result<(), CountingError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["level", "period", "zone", "sc", "n", "n_oa"])
        .map_err(|e| CountingError::InvalidTable(e.to_string()))?;
    let mut emit = |zone: &str, sc: &str, cell: &AggregateCell| {
        w.write_record([
            table.level.as_str(),
            &table.period.name,
            zone,
            sc,
            &cell.n.to_string(),
            &cell.n_oa.to_string(),
        ])
        .map_err(|e| CountingError::InvalidTable(e.to_string()))
    };
    for (sc, cell) in &table.world {
        emit(WORLD_ZONE, sc, cell)?;
    }
    for (zone, scs) in &table.cells {
        for (sc, cell) in scs {
            emit(zone, sc, cell)?;
        }
    }
    w.flush().map_err(|e| CountingError::InvalidTable(e.to_string()))
}

/// Reads one or more tables from aggregate CSV, grouped by level and period.
/// Periods are identified by name; year ranges are recovered from names of
/// the form `YYYY-YYYY`.
pub fn read_aggregate_csv<R: std::io::Read>(
    reader: R,
) -> Result<Vec<AggregateTable>, CountingError> {
    let mut rdr = csv::Reader::from_reader(reader);
    {
        let headers = rdr
            .headers()
            .map_err(|e| CountingError::InvalidTable(e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["level", "period", "zone", "sc", "n", "n_oa"] {
            return Err(CountingError::InvalidTable(format!(
                "expected header level,period,zone,sc,n,n_oa, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut tables: BTreeMap<(ZoneLevel, String), AggregateTable> = BTreeMap::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| CountingError::InvalidTable(e.to_string()))?;
        let line = idx + 2;
        let level = ZoneLevel::parse(&row[0])
            .ok_or_else(|| CountingError::InvalidTable(format!("line {line}: level {:?}", &row[0])))?;
        let period = row[1].to_string();
        let zone = row[2].to_string();
        let sc = row[3].to_string();
        let parse_count = |field: &str, label: &str| -> Result<f64, CountingError> {
            let v: f64 = field.parse().map_err(|_| {
                CountingError::InvalidTable(format!("line {line}: bad {label} {field:?}"))
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(CountingError::InvalidTable(format!(
                    "line {line}: {label} out of range"
                )));
            }
            Ok(v)
        };
        let n = parse_count(&row[4], "n")?;
        let n_oa = parse_count(&row[5], "n_oa")?;
        if n_oa > n {
            return Err(CountingError::InvalidTable(format!(
                "line {line}: n_oa exceeds n"
            )));
        }
        let table = tables
            .entry((level, period.clone()))
            .or_insert_with(|| AggregateTable::empty(level, PeriodSpec::from_name(&period)));
        let cell = AggregateCell { n, n_oa };
        let clash = if zone == WORLD_ZONE {
            table.world.insert(sc.clone(), cell).is_some()
        } else {
            table
                .cells
                .entry(zone.clone())
                .or_default()
                .insert(sc.clone(), cell)
                .is_some()
        };
        if clash {
            return Err(CountingError::InvalidTable(format!(
                "line {line}: duplicate row for zone {zone}, sc {sc}"
            )));
        }
    }
    Ok(tables.into_values().collect())
}
