//! Corpus model: publication records, subject scheme, zone registry, time
//! periods, and the ingest pipeline that turns raw files into clean records.

mod ingest;
mod record;
mod registry;
mod scheme;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{
    parse_publications, IngestReport, Ingestor, InputFormat, LineOutcome, RejectReason, Rejection,
    ValidatedRecord,
};
pub use record::{is_open, Affiliation, DocType, OaType, PublicationRecord};
pub use registry::{ZoneLevel, ZoneRegistry};
pub use scheme::SubjectScheme;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid subject scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid zone registry: {0}")]
    InvalidRegistry(String),
    #[error("invalid period: {0}")]
    InvalidPeriod(String),
}

/// A named, inclusive range of publication years.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub name: String,
    pub year_min: i32,
    pub year_max: i32,
}

impl PeriodSpec {
    pub fn new(name: impl Into<String>, year_min: i32, year_max: i32) -> Result<Self, CorpusError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(CorpusError::InvalidPeriod("blank period name".into()));
        }
        if year_min > year_max {
            return Err(CorpusError::InvalidPeriod(format!(
                "{name}: year_min {year_min} exceeds year_max {year_max}"
            )));
        }
        Ok(Self {
            name,
            year_min,
            year_max,
        })
    }

    /// Reconstructs a period from its name alone, recovering the year range
    /// when the name follows the `YYYY-YYYY` convention used by the CSV
    /// interchange files. Other names yield an empty range.
    pub fn from_name(name: &str) -> Self {
        if let Some((lo, hi)) = name.split_once('-') {
            if let (Ok(lo), Ok(hi)) = (lo.parse::<i32>(), hi.parse::<i32>()) {
                if lo <= hi {
                    return Self {
                        name: name.to_string(),
                        year_min: lo,
                        year_max: hi,
                    };
                }
            }
        }
        Self {
            name: name.to_string(),
            year_min: 0,
            year_max: 0,
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        self.year_min <= year && year <= self.year_max
    }

    pub fn overlaps(&self, other: &PeriodSpec) -> bool {
        self.year_min <= other.year_max && other.year_min <= self.year_max
    }
}

/// True when no two periods share a year.
pub fn periods_disjoint(periods: &[PeriodSpec]) -> bool {
    for (i, a) in periods.iter().enumerate() {
        for b in &periods[i + 1..] {
            if a.overlaps(b) {
                return false;
            }
        }
    }
    true
}

/// Keeps exactly the records whose year falls in the period and whose
/// document type is in the allowed set.
pub fn filter_corpus<'a>(
    records: &'a [PublicationRecord],
    period: &PeriodSpec,
    doc_types: &BTreeSet<DocType>,
) -> Vec<&'a PublicationRecord> {
    records
        .iter()
        .filter(|r| period.contains(r.year) && doc_types.contains(&r.doc_type))
        .collect()
}
