//! The machine-readable run report: resolved config, input digests, ingest
//! audit, stage timings, and the output inventory. Everything needed to
//! reproduce or audit a run, with no timestamps so reports stay comparable.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use oatlas_core::corpus::IngestReport;
use oatlas_core::export::JoinReport;
use oatlas_core::format_sig;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    #[serde(flatten)]
    pub report: IngestReport,
    /// Share of accepted records with at least one affiliation that cannot
    /// be placed in a registered NUTS1 region, in percent.
    pub region_unattributable_rate_percent: f64,
    pub region_unattributable_note: String,
}

impl IngestSummary {
    pub fn new(report: IngestReport) -> Self {
        let rate = report.region_unattributable_rate_percent();
        let note = format!(
            "{} of {} accepted records ({}%) lack a resolvable NUTS1 region",
            report.region_unattributable_records,
            report.accepted,
            format_sig(rate, 6)
        );
        Self {
            report,
            region_unattributable_rate_percent: rate,
            region_unattributable_note: note,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JoinSummary {
    pub file: String,
    #[serde(flatten)]
    pub report: JoinReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub ingest: IngestSummary,
    pub stages: Vec<StageTiming>,
    pub indicator_rows: u64,
    /// Zones skipped per indicator because the value is undefined there.
    pub indicator_skips: BTreeMap<String, u64>,
    pub skip_samples: Vec<String>,
    pub class_notes: Vec<String>,
    pub joins: Vec<JoinSummary>,
    /// Output files relative to output_dir, sorted.
    pub outputs: Vec<String>,
    pub errors: Vec<String>,
}

impl RunReport {
    pub fn write_json<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n")
    }
}

/// SHA-256 of a file's contents, hex-encoded.
pub fn digest_file(path: &Path) -> std::io::Result<InputDigest> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let read = reader.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(hasher.finalize()),
    })
}
