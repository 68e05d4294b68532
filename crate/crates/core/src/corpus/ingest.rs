//! Line-delimited ingest with record-level validation.
//!
//! A corpus file is one JSON object per line. Validation never aborts the
//! stream: a bad line is rejected with a reason and the parser moves on, so
//! one malformed export row cannot sink a multi-million-record run. Every
//! input line is either accepted or rejected, never silently skipped.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::record::{Affiliation, DocType, OaType, PublicationRecord};
use super::registry::ZoneRegistry;
use super::scheme::SubjectScheme;

/// Supported corpus encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    JsonLines,
}

/// Why a record was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// The line is not a JSON object with the required fields.
    Malformed,
    /// `doc_type` is not one of the known document types.
    UnknownDocType,
    /// An entry of `oa_types` is not a known OA route.
    UnknownOaType,
    /// `subject_categories` is empty after deduplication.
    EmptySubjectCategories,
    /// A subject category is absent from the subject scheme.
    UnknownSubjectCategory,
    /// A `nuts1` code contradicts the affiliation country.
    Nuts1PrefixMismatch,
    /// The `pub_id` was already seen; the later record loses.
    DuplicatePubId,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Malformed => "malformed",
            Self::UnknownDocType => "unknown_doc_type",
            Self::UnknownOaType => "unknown_oa_type",
            Self::EmptySubjectCategories => "empty_subject_categories",
            Self::UnknownSubjectCategory => "unknown_subject_category",
            Self::Nuts1PrefixMismatch => "nuts1_prefix_mismatch",
            Self::DuplicatePubId => "duplicate_pub_id",
        }
    }
}

/// One rejected line, with enough context to find it in the source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: u64,
    pub pub_id: Option<String>,
    pub reason: RejectReason,
    pub detail: String,
}

/// How many detailed rejection samples the report keeps.
const REJECTION_SAMPLE_CAP: usize = 20;

/// Ingest bookkeeping: line totals, rejection tallies, and the geographic
/// attribution failures that feed the region-unattributable rate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_lines: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub rejected_by_reason: BTreeMap<String, u64>,
    pub sample_rejections: Vec<Rejection>,
    /// Accepted records with at least one affiliation that resolves to no
    /// registered NUTS1 region.
    pub region_unattributable_records: u64,
    pub region_unattributable_affiliations: u64,
    /// Affiliations whose country code is absent from the registry. These
    /// records stay in the corpus and count toward world totals.
    pub unknown_country_affiliations: u64,
}

impl IngestReport {
    /// Share of accepted records with one or more addresses that could not
    /// be attributed to a region, as a percentage.
    pub fn region_unattributable_rate_percent(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            (self.region_unattributable_records * 100) as f64 / self.accepted as f64
        }
    }

    pub(crate) fn record_rejection(&mut self, rejection: Rejection) {
        self.rejected += 1;
        *self
            .rejected_by_reason
            .entry(rejection.reason.as_str().to_string())
            .or_insert(0) += 1;
        if self.sample_rejections.len() < REJECTION_SAMPLE_CAP {
            self.sample_rejections.push(rejection);
        }
    }
}

/// A record that passed pure validation, together with its attribution
/// counters. Duplicate detection still has to happen before acceptance.
#[derive(Debug, Clone)]
pub struct ValidatedRecord {
    pub record: PublicationRecord,
    pub region_unattributable_affiliations: u32,
    pub unknown_country_affiliations: u32,
}

/// Outcome of validating a single input line, before duplicate screening.
#[derive(Debug, Clone)]
pub enum LineOutcome {
    Valid(ValidatedRecord),
    Rejected {
        pub_id: Option<String>,
        reason: RejectReason,
        detail: String,
    },
}

#[derive(Deserialize)]
struct RawAffiliation {
    country: String,
    #[serde(default)]
    nuts1: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    pub_id: String,
    year: i32,
    doc_type: String,
    oa_types: Vec<String>,
    subject_categories: Vec<String>,
    affiliations: Vec<RawAffiliation>,
}

/// Streaming validator. `validate_line` is pure so callers may fan it out
/// across threads; `absorb` applies the serial parts (duplicate detection
/// and report counters) and must see outcomes in input order.
pub struct Ingestor<'a> {
    scheme: &'a SubjectScheme,
    registry: &'a ZoneRegistry,
    seen_ids: HashSet<String>,
    report: IngestReport,
}

impl<'a> Ingestor<'a> {
    pub fn new(scheme: &'a SubjectScheme, registry: &'a ZoneRegistry) -> Self {
        Self {
            scheme,
            registry,
            seen_ids: HashSet::new(),
            report: IngestReport::default(),
        }
    }

    /// Validates one line without touching shared state.
    pub fn validate_line(&self, line: &str) -> LineOutcome {
        let raw: RawRecord = match serde_json::from_str(line) {
            Ok(raw) => raw,
            Err(e) => {
                return LineOutcome::Rejected {
                    pub_id: None,
                    reason: RejectReason::Malformed,
                    detail: e.to_string(),
                }
            }
        };
        if raw.pub_id.trim().is_empty() {
            return LineOutcome::Rejected {
                pub_id: None,
                reason: RejectReason::Malformed,
                detail: "blank pub_id".to_string(),
            };
        }
        let reject = |reason, detail: String| LineOutcome::Rejected {
            pub_id: Some(raw.pub_id.clone()),
            reason,
            detail,
        };

        let doc_type = match DocType::parse(&raw.doc_type) {
            Some(dt) => dt,
            None => {
                return reject(
                    RejectReason::UnknownDocType,
                    format!("doc_type {:?}", raw.doc_type),
                )
            }
        };

        let mut oa_types = BTreeSet::new();
        for entry in &raw.oa_types {
            match OaType::parse(entry) {
                Some(oa) => {
                    oa_types.insert(oa);
                }
                None => {
                    return reject(RejectReason::UnknownOaType, format!("oa_type {entry:?}"))
                }
            }
        }

        let subject_categories: BTreeSet<String> =
            raw.subject_categories.iter().cloned().collect();
        if subject_categories.is_empty() {
            return reject(
                RejectReason::EmptySubjectCategories,
                "no subject categories".to_string(),
            );
        }
        for sc in &subject_categories {
            if !self.scheme.contains_sc(sc) {
                return reject(
                    RejectReason::UnknownSubjectCategory,
                    format!("subject category {sc:?}"),
                );
            }
        }

        let mut region_unattributable = 0u32;
        let mut unknown_country = 0u32;
        let mut affiliations = Vec::with_capacity(raw.affiliations.len());
        for aff in raw.affiliations {
            if aff.country.trim().is_empty() {
                return reject(
                    RejectReason::Malformed,
                    "affiliation with blank country".to_string(),
                );
            }
            if let Some(nuts1) = &aff.nuts1 {
                if let Some(region_country) = self.registry.region_country(nuts1) {
                    if region_country != aff.country {
                        return reject(
                            RejectReason::Nuts1PrefixMismatch,
                            format!(
                                "region {nuts1} belongs to {region_country}, not {}",
                                aff.country
                            ),
                        );
                    }
                } else if let Some(prefix) = self.registry.nuts_prefix(&aff.country) {
                    if !nuts1.starts_with(prefix) {
                        return reject(
                            RejectReason::Nuts1PrefixMismatch,
                            format!("nuts1 {nuts1} does not match prefix {prefix} of {}", aff.country),
                        );
                    }
                }
            }
            let resolvable = aff
                .nuts1
                .as_deref()
                .map(|code| self.registry.has_region(code))
                .unwrap_or(false);
            if !resolvable {
                region_unattributable += 1;
            }
            if !self.registry.has_country(&aff.country) {
                unknown_country += 1;
            }
            affiliations.push(Affiliation {
                country: aff.country,
                nuts1: aff.nuts1,
            });
        }

        LineOutcome::Valid(ValidatedRecord {
            record: PublicationRecord {
                pub_id: raw.pub_id,
                year: raw.year,
                doc_type,
                oa_types,
                subject_categories,
                affiliations,
            },
            region_unattributable_affiliations: region_unattributable,
            unknown_country_affiliations: unknown_country,
        })
    }

    /// Applies duplicate screening and report accounting to one outcome.
    /// Returns the record if it was accepted.
    pub fn absorb(&mut self, outcome: LineOutcome) -> Option<PublicationRecord> {
        self.report.total_lines += 1;
        let line = self.report.total_lines;
        match outcome {
            LineOutcome::Valid(validated) => {
                if !self.seen_ids.insert(validated.record.pub_id.clone()) {
                    self.report.record_rejection(Rejection {
                        line,
                        pub_id: Some(validated.record.pub_id.clone()),
                        reason: RejectReason::DuplicatePubId,
                        detail: format!("pub_id {} already seen", validated.record.pub_id),
                    });
                    return None;
                }
                self.report.accepted += 1;
                if validated.region_unattributable_affiliations > 0 {
                    self.report.region_unattributable_records += 1;
                }
                self.report.region_unattributable_affiliations +=
                    u64::from(validated.region_unattributable_affiliations);
                self.report.unknown_country_affiliations +=
                    u64::from(validated.unknown_country_affiliations);
                Some(validated.record)
            }
            LineOutcome::Rejected {
                pub_id,
                reason,
                detail,
            } => {
                self.report.record_rejection(Rejection {
                    line,
                    pub_id,
                    reason,
                    detail,
                });
                None
            }
        }
    }

    pub fn ingest_line(&mut self, line: &str) -> Option<PublicationRecord> {
        let outcome = self.validate_line(line);
        self.absorb(outcome)
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }
}

/// Parses a whole corpus stream, returning the accepted records and the
/// ingest report. IO errors on the underlying reader abort; record-level
/// problems never do.
pub fn parse_publications<R: BufRead>(
    reader: R,
    format: InputFormat,
    scheme: &SubjectScheme,
    registry: &ZoneRegistry,
) -> std::io::Result<(Vec<PublicationRecord>, IngestReport)> {
    let InputFormat::JsonLines = format;
    let mut ingestor = Ingestor::new(scheme, registry);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(record) = ingestor.ingest_line(&line) {
            records.push(record);
        }
    }
    Ok((records, ingestor.into_report()))
}
