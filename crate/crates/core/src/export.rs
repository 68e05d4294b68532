//! Choropleth exports: classed indicator tables as CSV and enriched GeoJSON
//! feature collections.
//!
//! Exported values are rounded to 6 significant digits so output files are
//! byte-stable across runs; full precision stays internal to the indicator
//! computations. GeoJSON joins go through `serde_json::Value` with the
//! `arbitrary_precision` feature, so coordinate and property numbers keep
//! their original textual form.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::classify::{classify, ClassScheme, ClassifyError};
use crate::corpus::{ZoneLevel, ZoneRegistry};
use crate::indicators::LabeledResult;
use crate::numeric::format_sig;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unknown zone codes: {0}")]
    UnknownZones(String),
    #[error("results mix zone levels")]
    MixedLevels,
    #[error("geometry join requires a single indicator, found: {0}")]
    MixedIndicators(String),
    #[error("geometry join requires a single period, found: {0}")]
    MixedPeriods(String),
    #[error("duplicate zone in geometry join: {0}")]
    DuplicateZone(String),
    #[error("classification failed: {0}")]
    Classify(#[from] ClassifyError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unreadable geometry: {0}")]
    Geometry(String),
    #[error("feature at index {ordinal} missing id property \"{property}\"")]
    MissingIdProperty { ordinal: usize, property: String },
    #[error("feature at index {ordinal} already has property \"{property}\"")]
    PropertyCollision { ordinal: usize, property: String },
    #[error("invalid choropleth row: {0}")]
    InvalidRow(String),
}

/// Default feature id property for geometry joins.
pub const DEFAULT_ID_PROPERTY: &str = "NUTS_ID";

pub const CHOROPLETH_HEADER: [&str; 8] = [
    "zone",
    "zone_name",
    "period",
    "indicator",
    "value",
    "class_index",
    "class_label",
    "support",
];

/// One classed indicator value, ready for mapping. `value` is already
/// rounded to 6 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoroplethRow {
    pub zone: String,
    pub zone_name: String,
    pub period: String,
    pub indicator: String,
    pub value: f64,
    pub class_index: usize,
    pub class_label: String,
    pub support: f64,
}

fn round_sig(value: f64, digits: usize) -> f64 {
    format_sig(value, digits)
        .parse()
        .expect("formatted value parses")
}

/// Classifies results against the scheme and resolves zone names, producing
/// rows sorted by (period, zone, indicator). All results must share one zone
/// level and every zone must be registered at that level.
pub fn choropleth_rows(
    results: &[LabeledResult],
    scheme: &ClassScheme,
    registry: &ZoneRegistry,
) -> Result<Vec<ChoroplethRow>, ExportError> {
    let mut level: Option<ZoneLevel> = None;
    let mut unknown: BTreeSet<String> = BTreeSet::new();
    let mut rows = Vec::with_capacity(results.len());
    for labeled in results {
        match level {
            None => level = Some(labeled.level),
            Some(l) if l != labeled.level => return Err(ExportError::MixedLevels),
            _ => {}
        }
        let zone = &labeled.result.zone;
        let Some(name) = registry.zone_name(labeled.level, zone) else {
            unknown.insert(zone.clone());
            continue;
        };
        // Classify the rounded value, not the raw one, so the emitted class
        // is consistent with the emitted value.
        let value = round_sig(labeled.result.value, 6);
        let class_index = classify(value, scheme)?;
        rows.push(ChoroplethRow {
            zone: zone.clone(),
            zone_name: name.to_string(),
            period: labeled.result.period.clone(),
            indicator: labeled.indicator.clone(),
            value,
            class_index,
            class_label: scheme.labels[class_index].clone(),
            support: round_sig(labeled.result.support, 6),
        });
    }
    if !unknown.is_empty() {
        let list = unknown.into_iter().collect::<Vec<_>>().join(", ");
        return Err(ExportError::UnknownZones(list));
    }
    rows.sort_by(|a, b| {
        (&a.period, &a.zone, &a.indicator).cmp(&(&b.period, &b.zone, &b.indicator))
    });
    Ok(rows)
}

/// Writes the classed results as CSV and returns the number of data rows.
pub fn emit_table<W: Write>(
    results: &[LabeledResult],
    scheme: &ClassScheme,
    registry: &ZoneRegistry,
    writer: W,
) -> Result<usize, ExportError> {
    let rows = choropleth_rows(results, scheme, registry)?;
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CHOROPLETH_HEADER)?;
    for row in &rows {
        out.write_record([
            row.zone.as_str(),
            row.zone_name.as_str(),
            row.period.as_str(),
            row.indicator.as_str(),
            &format_sig(row.value, 6),
            &row.class_index.to_string(),
            row.class_label.as_str(),
            &format_sig(row.support, 6),
        ])?;
    }
    out.flush()?;
    Ok(rows.len())
}

/// Parses a file produced by `emit_table`.
pub fn read_choropleth_csv<R: Read>(reader: R) -> Result<Vec<ChoroplethRow>, ExportError> {
    let mut input = csv::Reader::from_reader(reader);
    let headers = input.headers()?.clone();
    if headers.iter().ne(CHOROPLETH_HEADER) {
        return Err(ExportError::InvalidRow(format!(
            "unexpected header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in input.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        let value: f64 = field(4)
            .parse()
            .map_err(|_| ExportError::InvalidRow(format!("bad value: {}", field(4))))?;
        let class_index: usize = field(5)
            .parse()
            .map_err(|_| ExportError::InvalidRow(format!("bad class index: {}", field(5))))?;
        let support: f64 = field(7)
            .parse()
            .map_err(|_| ExportError::InvalidRow(format!("bad support: {}", field(7))))?;
        rows.push(ChoroplethRow {
            zone: field(0).to_string(),
            zone_name: field(1).to_string(),
            period: field(2).to_string(),
            indicator: field(3).to_string(),
            value,
            class_index,
            class_label: field(6).to_string(),
            support,
        });
    }
    Ok(rows)
}

/// Outcome of a geometry join.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct JoinReport {
    pub features: usize,
    pub matched: usize,
    pub no_data: usize,
    /// Result zones that matched no feature, sorted.
    pub unmatched_zones: Vec<String>,
}

fn json_number(value: f64) -> Value {
    serde_json::from_str::<Value>(&format_sig(value, 6)).expect("formatted number parses")
}

fn insert_checked(
    properties: &mut Map<String, Value>,
    ordinal: usize,
    key: &str,
    value: Value,
) -> Result<(), ExportError> {
    if properties.contains_key(key) {
        return Err(ExportError::PropertyCollision {
            ordinal,
            property: key.to_string(),
        });
    }
    properties.insert(key.to_string(), value);
    Ok(())
}

/// Joins classed results onto a GeoJSON feature collection.
///
/// Features whose id property matches a result zone gain `value`,
/// `class_index`, `class_label`, and `support` properties; all other
/// features gain `no_data: true`. Coordinates and pre-existing properties
/// pass through untouched. Results must cover exactly one indicator and one
/// period with at most one row per zone.
pub fn join_geojson<W: Write>(
    results: &[LabeledResult],
    scheme: &ClassScheme,
    registry: &ZoneRegistry,
    geometry_text: &str,
    id_property: &str,
    writer: W,
) -> Result<JoinReport, ExportError> {
    let rows = choropleth_rows(results, scheme, registry)?;
    let mut by_zone: BTreeMap<&str, &ChoroplethRow> = BTreeMap::new();
    let mut indicators: BTreeSet<&str> = BTreeSet::new();
    let mut periods: BTreeSet<&str> = BTreeSet::new();
    for row in &rows {
        indicators.insert(&row.indicator);
        periods.insert(&row.period);
        if by_zone.insert(&row.zone, row).is_some() {
            return Err(ExportError::DuplicateZone(row.zone.clone()));
        }
    }
    if indicators.len() > 1 {
        let list = indicators.into_iter().collect::<Vec<_>>().join(", ");
        return Err(ExportError::MixedIndicators(list));
    }
    if periods.len() > 1 {
        let list = periods.into_iter().collect::<Vec<_>>().join(", ");
        return Err(ExportError::MixedPeriods(list));
    }

    let mut root: Value = serde_json::from_str(geometry_text)
        .map_err(|e| ExportError::Geometry(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| ExportError::Geometry("not a JSON object".into()))?;
    if obj.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(ExportError::Geometry("not a FeatureCollection".into()));
    }
    let features = root
        .as_object_mut()
        .unwrap()
        .get_mut("features")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| ExportError::Geometry("missing features array".into()))?;

    let mut matched = 0usize;
    let mut no_data = 0usize;
    let mut seen_zones: BTreeSet<String> = BTreeSet::new();
    for (ordinal, feature) in features.iter_mut().enumerate() {
        let feature_obj = feature
            .as_object_mut()
            .ok_or_else(|| ExportError::Geometry(format!("feature at index {ordinal} not an object")))?;
        if !feature_obj
            .get("properties")
            .is_some_and(Value::is_object)
        {
            feature_obj.insert("properties".to_string(), Value::Object(Map::new()));
        }
        let properties = feature_obj
            .get_mut("properties")
            .and_then(Value::as_object_mut)
            .unwrap();
        let id = properties
            .get(id_property)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ExportError::MissingIdProperty {
                ordinal,
                property: id_property.to_string(),
            })?;
        match by_zone.get(id.as_str()) {
            Some(row) => {
                insert_checked(properties, ordinal, "value", json_number(row.value))?;
                insert_checked(
                    properties,
                    ordinal,
                    "class_index",
                    Value::from(row.class_index),
                )?;
                insert_checked(
                    properties,
                    ordinal,
                    "class_label",
                    Value::from(row.class_label.as_str()),
                )?;
                insert_checked(properties, ordinal, "support", json_number(row.support))?;
                seen_zones.insert(id);
                matched += 1;
            }
            None => {
                insert_checked(properties, ordinal, "no_data", Value::Bool(true))?;
                no_data += 1;
            }
        }
    }
    let unmatched_zones: Vec<String> = by_zone
        .keys()
        .filter(|z| !seen_zones.contains(**z))
        .map(|z| z.to_string())
        .collect();
    let report = JoinReport {
        features: features.len(),
        matched,
        no_data,
        unmatched_zones,
    };
    let mut writer = writer;
    serde_json::to_writer_pretty(&mut writer, &root)
        .map_err(|e| ExportError::Geometry(e.to_string()))?;
    writer.write_all(b"\n")?;
    Ok(report)
}
