//! Indicator computation on aggregated tables.
//!
//! Three indicators are supported: the plain OA share of a zone, the
//! normalized open-access index (NOAI) in which each subject category is
//! compared against its world OA share before averaging, and the
//! specialization index relating a zone's disciplinary profile to the world
//! profile. All of them read [`AggregateTable`] cells only, so any counting
//! mode upstream is reflected transparently.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting::{AggregateCell, AggregateTable, WORLD_ZONE};
use crate::corpus::{SubjectScheme, ZoneLevel};
use crate::numeric::KahanSum;

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("no publications for zone {0}")]
    NoPublications(String),
    #[error("undefined index for SC {0}: world OA share is zero")]
    UndefinedIndex(String),
    #[error("no support for SC {sc} in zone {zone}")]
    NoScSupport { zone: String, sc: String },
    #[error("NOAI undefined for zone {0}: no SC with a defined index")]
    NoaiUndefined(String),
    #[error("unknown discipline {0}")]
    UnknownDiscipline(String),
    #[error("specialization undefined for discipline {0}: zero world share")]
    SpecializationUndefined(String),
    #[error("table contains SC {0} that the scheme does not declare")]
    UnknownSc(String),
}

/// One computed indicator value for a zone and period.
///
/// `support` is the fractional publication count behind the value, so
/// consumers can suppress or flag low-support zones. `excluded_scs` lists
/// subject categories that had to be left out (NOAI only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorResult {
    pub zone: String,
    pub period: String,
    pub value: f64,
    pub support: f64,
    pub excluded_scs: Vec<String>,
}

/// An indicator result tagged with its level and indicator name, ready for
/// serialization and export.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledResult {
    pub level: ZoneLevel,
    pub indicator: String,
    pub result: IndicatorResult,
}

fn cells_of<'t>(
    table: &'t AggregateTable,
    zone: &str,
) -> Option<&'t BTreeMap<String, AggregateCell>> {
    if zone == WORLD_ZONE {
        Some(&table.world)
    } else {
        table.cells.get(zone)
    }
}

/// Share of open-access publications in a zone: total OA weight over total
/// weight across all subject categories. Pass [`WORLD_ZONE`] for the world
/// share.
pub fn oa_share(table: &AggregateTable, zone: &str) -> Result<IndicatorResult, IndicatorError> {
    let cells = cells_of(table, zone).ok_or_else(|| IndicatorError::NoPublications(zone.into()))?;
    let mut n = KahanSum::new();
    let mut n_oa = KahanSum::new();
    for cell in cells.values() {
        n.add(cell.n);
        n_oa.add(cell.n_oa);
    }
    let support = n.value();
    if support <= 0.0 {
        return Err(IndicatorError::NoPublications(zone.into()));
    }
    Ok(IndicatorResult {
        zone: zone.to_string(),
        period: table.period.name.clone(),
        value: n_oa.value() / support,
        support,
        excluded_scs: Vec::new(),
    })
}

/// World OA shares broken down by discipline.
#[derive(Debug, Clone, PartialEq)]
pub struct DisciplineShares {
    pub shares: BTreeMap<String, IndicatorResult>,
    /// Disciplines with zero world support, omitted from `shares`.
    pub excluded: Vec<String>,
}

/// OA share of the world rows per discipline of the scheme. Disciplines
/// without any publications are omitted and listed as excluded.
pub fn oa_share_by_discipline(
    table: &AggregateTable,
    scheme: &SubjectScheme,
) -> Result<DisciplineShares, IndicatorError> {
    let mut sums: BTreeMap<&str, (KahanSum, KahanSum)> = BTreeMap::new();
    for (sc, cell) in &table.world {
        let discipline = scheme
            .discipline_of(sc)
            .ok_or_else(|| IndicatorError::UnknownSc(sc.clone()))?;
        let entry = sums.entry(discipline).or_default();
        entry.0.add(cell.n);
        entry.1.add(cell.n_oa);
    }
    let mut shares = BTreeMap::new();
    let mut excluded = Vec::new();
    for discipline in scheme.disciplines() {
        match sums.get(discipline.as_str()) {
            Some((n, n_oa)) if n.value() > 0.0 => {
                shares.insert(
                    discipline.clone(),
                    IndicatorResult {
                        zone: WORLD_ZONE.to_string(),
                        period: table.period.name.clone(),
                        value: n_oa.value() / n.value(),
                        support: n.value(),
                        excluded_scs: Vec::new(),
                    },
                );
            }
            _ => excluded.push(discipline.clone()),
        }
    }
    Ok(DisciplineShares { shares, excluded })
}

fn oai_of_cells(zone_cell: &AggregateCell, world_cell: &AggregateCell) -> f64 {
    (zone_cell.n_oa / zone_cell.n) / (world_cell.n_oa / world_cell.n)
}

/// Open-access index of one subject category in one zone: the zone's OA
/// share within the SC divided by the world OA share of the SC.
pub fn oai_sc(table: &AggregateTable, zone: &str, sc: &str) -> Result<f64, IndicatorError> {
    let cells = cells_of(table, zone).ok_or_else(|| IndicatorError::NoPublications(zone.into()))?;
    let zone_cell = cells
        .get(sc)
        .filter(|c| c.n > 0.0)
        .ok_or_else(|| IndicatorError::NoScSupport {
            zone: zone.into(),
            sc: sc.into(),
        })?;
    let world_cell = table
        .world
        .get(sc)
        .filter(|c| c.n > 0.0)
        .ok_or_else(|| IndicatorError::UndefinedIndex(sc.into()))?;
    if world_cell.n_oa <= 0.0 {
        return Err(IndicatorError::UndefinedIndex(sc.into()));
    }
    Ok(oai_of_cells(zone_cell, world_cell))
}

/// Normalized open-access index of a zone: the mean of per-SC OA indexes
/// weighted by the zone's fractional publication counts.
///
/// Subject categories whose index is undefined (zero world OA share) are
/// excluded and the remaining weights renormalize; the exclusions are
/// reported on the result. By construction the world's own NOAI is 1.
pub fn noai(table: &AggregateTable, zone: &str) -> Result<IndicatorResult, IndicatorError> {
    let cells = cells_of(table, zone).ok_or_else(|| IndicatorError::NoPublications(zone.into()))?;
    let mut weighted = KahanSum::new();
    let mut weights = KahanSum::new();
    let mut excluded = Vec::new();
    for (sc, zone_cell) in cells {
        if zone_cell.n <= 0.0 {
            continue;
        }
        let defined = table
            .world
            .get(sc)
            .filter(|w| w.n > 0.0 && w.n_oa > 0.0);
        match defined {
            Some(world_cell) => {
                weighted.add(oai_of_cells(zone_cell, world_cell) * zone_cell.n);
                weights.add(zone_cell.n);
            }
            None => excluded.push(sc.clone()),
        }
    }
    let support = weights.value();
    if support <= 0.0 {
        return Err(IndicatorError::NoaiUndefined(zone.into()));
    }
    Ok(IndicatorResult {
        zone: zone.to_string(),
        period: table.period.name.clone(),
        value: weighted.value() / support,
        support,
        excluded_scs: excluded,
    })
}

/// Specialization index of a zone in a discipline: the discipline's share of
/// the zone's output divided by its share of the world's output.
pub fn specialization_index(
    table: &AggregateTable,
    scheme: &SubjectScheme,
    zone: &str,
    discipline: &str,
) -> Result<f64, IndicatorError> {
    if !scheme.disciplines().iter().any(|d| d == discipline) {
        return Err(IndicatorError::UnknownDiscipline(discipline.into()));
    }
    let cells = cells_of(table, zone).ok_or_else(|| IndicatorError::NoPublications(zone.into()))?;
    let sum_split = |cells: &BTreeMap<String, AggregateCell>| -> Result<(f64, f64), IndicatorError> {
        let mut total = KahanSum::new();
        let mut in_discipline = KahanSum::new();
        for (sc, cell) in cells {
            let d = scheme
                .discipline_of(sc)
                .ok_or_else(|| IndicatorError::UnknownSc(sc.clone()))?;
            total.add(cell.n);
            if d == discipline {
                in_discipline.add(cell.n);
            }
        }
        Ok((total.value(), in_discipline.value()))
    };
    let (zone_total, zone_d) = sum_split(cells)?;
    if zone_total <= 0.0 {
        return Err(IndicatorError::NoPublications(zone.into()));
    }
    let (world_total, world_d) = sum_split(&table.world)?;
    if world_total <= 0.0 || world_d <= 0.0 {
        return Err(IndicatorError::SpecializationUndefined(discipline.into()));
    }
    Ok((zone_d / zone_total) / (world_d / world_total))
}

/// Total fractional publication count of a zone in a table.
pub fn zone_support(table: &AggregateTable, zone: &str) -> Option<f64> {
    cells_of(table, zone).map(|cells| KahanSum::sum_iter(cells.values().map(|c| c.n)))
}

/// Flat serialized form of a labeled indicator result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub level: ZoneLevel,
    pub period: String,
    pub zone: String,
    pub indicator: String,
    pub value: f64,
    pub support: f64,
    pub excluded_sc_count: u64,
}

impl From<&LabeledResult> for IndicatorRow {
    fn from(labeled: &LabeledResult) -> Self {
        IndicatorRow {
            level: labeled.level,
            period: labeled.result.period.clone(),
            zone: labeled.result.zone.clone(),
            indicator: labeled.indicator.clone(),
            value: labeled.result.value,
            support: labeled.result.support,
            excluded_sc_count: labeled.result.excluded_scs.len() as u64,
        }
    }
}

/// Writes indicator rows as CSV with columns
/// `level,period,zone,indicator,value,support,excluded_sc_count`, sorted by
/// (level, period, zone, indicator). Values use the shortest round-trip
/// float notation.
pub fn write_indicator_csv<W: std::io::Write>(
    rows: &[IndicatorRow],
    writer: W,
) -> Result<(), std::io::Error> {
    let mut sorted: Vec<&IndicatorRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.level, &a.period, &a.zone, &a.indicator).cmp(&(b.level, &b.period, &b.zone, &b.indicator))
    });
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "level",
        "period",
        "zone",
        "indicator",
        "value",
        "support",
        "excluded_sc_count",
    ])?;
    for row in sorted {
        w.write_record([
            row.level.as_str(),
            &row.period,
            &row.zone,
            &row.indicator,
            &row.value.to_string(),
            &row.support.to_string(),
            &row.excluded_sc_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads indicator rows back from CSV.
pub fn read_indicator_csv<R: std::io::Read>(reader: R) -> Result<Vec<IndicatorRow>, String> {
    let mut rdr = csv::Reader::from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| e.to_string())?;
        let expected = [
            "level",
            "period",
            "zone",
            "indicator",
            "value",
            "support",
            "excluded_sc_count",
        ];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(format!(
                "expected header {}, found {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ));
        }
    }
    let mut rows = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let line = idx + 2;
        let level = ZoneLevel::parse(&row[0])
            .ok_or_else(|| format!("line {line}: unknown level {:?}", &row[0]))?;
        let value: f64 = row[4]
            .parse()
            .map_err(|_| format!("line {line}: bad value {:?}", &row[4]))?;
        let support: f64 = row[5]
            .parse()
            .map_err(|_| format!("line {line}: bad support {:?}", &row[5]))?;
        let excluded_sc_count: u64 = row[6]
            .parse()
            .map_err(|_| format!("line {line}: bad excluded_sc_count {:?}", &row[6]))?;
        rows.push(IndicatorRow {
            level,
            period: row[1].to_string(),
            zone: row[2].to_string(),
            indicator: row[3].to_string(),
            value,
            support,
            excluded_sc_count,
        });
    }
    Ok(rows)
}
