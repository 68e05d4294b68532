//! Run configuration: a JSON file with every methodological choice
//! pre-filled so a minimal config (inputs and output directory) reproduces
//! the default setup on any corpus.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use oatlas_core::corpus::{periods_disjoint, DocType, PeriodSpec, ZoneLevel};
use oatlas_core::{symmetric_scheme, GeoCounting};

pub const INDICATOR_NAMES: [&str; 4] = ["oa_share", "noai", "specialization", "discipline_share"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus files in JSON Lines format, read in order.
    pub corpus: Vec<PathBuf>,
    /// CSV mapping subject categories to disciplines.
    pub subject_scheme: PathBuf,
    /// CSV of countries and NUTS1 regions.
    pub zone_registry: PathBuf,
    /// Directory for all outputs, created if absent.
    pub output_dir: PathBuf,
    #[serde(default = "default_periods")]
    pub periods: Vec<PeriodSpec>,
    #[serde(default = "default_doc_types")]
    pub doc_types: Vec<String>,
    #[serde(default = "default_levels")]
    pub levels: Vec<String>,
    #[serde(default = "default_indicators")]
    pub indicators: Vec<String>,
    #[serde(default = "default_oa_share_classes")]
    pub oa_share_classes: usize,
    #[serde(default = "default_noai_classes")]
    pub noai_classes: usize,
    #[serde(default = "default_symmetric_bounds")]
    pub symmetric_bounds: Vec<f64>,
    /// Optional GeoJSON feature collection to join classed values onto.
    #[serde(default)]
    pub geometry: Option<PathBuf>,
    #[serde(default = "default_id_property")]
    pub geometry_id_property: String,
    /// "whole" (default) or "fractional".
    #[serde(default = "default_geo_counting")]
    pub geo_counting: String,
    /// Worker threads for ingestion; default is all available cores.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_periods() -> Vec<PeriodSpec> {
    vec![
        PeriodSpec::new("2000-2003", 2000, 2003).unwrap(),
        PeriodSpec::new("2008-2011", 2008, 2011).unwrap(),
        PeriodSpec::new("2015-2018", 2015, 2018).unwrap(),
    ]
}

fn default_doc_types() -> Vec<String> {
    vec!["article".into(), "letter".into(), "review".into()]
}

fn default_levels() -> Vec<String> {
    vec!["country".into(), "nuts1".into()]
}

fn default_indicators() -> Vec<String> {
    INDICATOR_NAMES.iter().map(|s| s.to_string()).collect()
}

fn default_oa_share_classes() -> usize {
    9
}

fn default_noai_classes() -> usize {
    7
}

pub fn default_symmetric_bounds() -> Vec<f64> {
    vec![0.5, 0.75, 0.9, 1.1, 1.5, 2.0]
}

fn default_id_property() -> String {
    "NUTS_ID".into()
}

fn default_geo_counting() -> String {
    "whole".into()
}

fn filename_safe(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(config)
    }

    pub fn parsed_doc_types(&self) -> BTreeSet<DocType> {
        self.doc_types
            .iter()
            .filter_map(|s| DocType::parse(s))
            .collect()
    }

    pub fn parsed_levels(&self) -> Vec<ZoneLevel> {
        self.levels
            .iter()
            .filter_map(|s| ZoneLevel::parse(s))
            .collect()
    }

    pub fn parsed_geo_counting(&self) -> GeoCounting {
        match self.geo_counting.as_str() {
            "fractional" => GeoCounting::Fractional,
            _ => GeoCounting::Whole,
        }
    }

    pub fn wants(&self, indicator: &str) -> bool {
        self.indicators.iter().any(|i| i == indicator)
    }

    /// Collects every violation rather than stopping at the first. An empty
    /// list means the config is runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut diagnostics = Vec::new();
        if self.corpus.is_empty() {
            diagnostics.push("corpus: no input files configured".to_string());
        }
        for path in &self.corpus {
            if path.as_os_str().is_empty() {
                diagnostics.push("corpus: empty path".to_string());
            } else if !path.is_file() {
                diagnostics.push(format!("corpus: file not found: {}", path.display()));
            }
        }
        for (label, path) in [
            ("subject_scheme", &self.subject_scheme),
            ("zone_registry", &self.zone_registry),
        ] {
            if path.as_os_str().is_empty() {
                diagnostics.push(format!("{label}: empty path"));
            } else if !path.is_file() {
                diagnostics.push(format!("{label}: file not found: {}", path.display()));
            }
        }
        if let Some(geometry) = &self.geometry {
            if !geometry.is_file() {
                diagnostics.push(format!("geometry: file not found: {}", geometry.display()));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            diagnostics.push("output_dir: empty path".to_string());
        }

        if self.periods.is_empty() {
            diagnostics.push("periods: at least one period is required".to_string());
        }
        let mut names = BTreeSet::new();
        for period in &self.periods {
            if period.year_min > period.year_max {
                diagnostics.push(format!(
                    "periods: {} has year_min {} > year_max {}",
                    period.name, period.year_min, period.year_max
                ));
            }
            if !filename_safe(&period.name) {
                diagnostics.push(format!(
                    "periods: name \"{}\" must use only letters, digits, '-', '_', '.'",
                    period.name
                ));
            }
            if !names.insert(&period.name) {
                diagnostics.push(format!("periods: duplicate name {}", period.name));
            }
        }
        if !periods_disjoint(&self.periods) {
            diagnostics.push("periods: year ranges overlap".to_string());
        }

        if self.doc_types.is_empty() {
            diagnostics.push("doc_types: at least one document type is required".to_string());
        }
        for dt in &self.doc_types {
            if DocType::parse(dt).is_none() {
                diagnostics.push(format!(
                    "doc_types: unknown value \"{dt}\" (expected article, letter, review, other)"
                ));
            }
        }
        if self.levels.is_empty() {
            diagnostics.push("levels: at least one zone level is required".to_string());
        }
        for level in &self.levels {
            if ZoneLevel::parse(level).is_none() {
                diagnostics.push(format!(
                    "levels: unknown value \"{level}\" (expected country or nuts1)"
                ));
            }
        }
        if self.indicators.is_empty() {
            diagnostics.push("indicators: at least one indicator is required".to_string());
        }
        for indicator in &self.indicators {
            if !INDICATOR_NAMES.contains(&indicator.as_str()) {
                diagnostics.push(format!(
                    "indicators: unknown value \"{indicator}\" (expected {})",
                    INDICATOR_NAMES.join(", ")
                ));
            }
        }

        if self.oa_share_classes < 1 {
            diagnostics.push("oa_share_classes: must be at least 1".to_string());
        }
        if self.noai_classes < 1 {
            diagnostics.push("noai_classes: must be at least 1".to_string());
        }
        match symmetric_scheme(&self.symmetric_bounds) {
            Ok(scheme) => {
                if scheme.class_count() != self.noai_classes {
                    diagnostics.push(format!(
                        "noai_classes: {} does not match the {} classes implied by symmetric_bounds",
                        self.noai_classes,
                        scheme.class_count()
                    ));
                }
            }
            Err(e) => diagnostics.push(format!("symmetric_bounds: {e}")),
        }
        if !["whole", "fractional"].contains(&self.geo_counting.as_str()) {
            diagnostics.push(format!(
                "geo_counting: unknown value \"{}\" (expected whole or fractional)",
                self.geo_counting
            ));
        }
        if self.threads == Some(0) {
            diagnostics.push("threads: must be at least 1 when set".to_string());
        }
        diagnostics
    }
}
