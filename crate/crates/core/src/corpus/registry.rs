//! Zone registry: the known countries and NUTS level-1 regions, plus the
//! mapping between ISO country codes and NUTS code prefixes.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Geographic aggregation level of an analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneLevel {
    Country,
    Nuts1,
}

impl ZoneLevel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "country" => Some(Self::Country),
            "nuts1" => Some(Self::Nuts1),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Country => "country",
            Self::Nuts1 => "nuts1",
        }
    }
}

impl std::fmt::Display for ZoneLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct RegionEntry {
    name: String,
    country: String,
}

/// Registry of countries and their NUTS1 regions.
///
/// Region codes do not always start with the ISO code of their country (the
/// United Kingdom is `GB` in ISO but `UK` in NUTS, Greece is `GR`/`EL`), so
/// the registry derives an explicit country-to-prefix map from its region
/// rows and exposes it for validation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ZoneRegistry {
    countries: BTreeMap<String, String>,
    regions: BTreeMap<String, RegionEntry>,
    nuts_prefix: BTreeMap<String, String>,
}

impl ZoneRegistry {
    /// Builds a registry from country `(code, name)` rows and region
    /// `(code, name, country_code)` rows.
    pub fn new(
        countries: Vec<(String, String)>,
        regions: Vec<(String, String, String)>,
    ) -> Result<Self, CorpusError> {
        let mut registry = ZoneRegistry::default();
        for (code, name) in countries {
            if code.trim().is_empty() {
                return Err(CorpusError::InvalidRegistry("blank country code".into()));
            }
            if registry.countries.insert(code.clone(), name).is_some() {
                return Err(CorpusError::InvalidRegistry(format!(
                    "duplicate country code {code}"
                )));
            }
        }
        for (code, name, country) in regions {
            if code.len() < 2 {
                return Err(CorpusError::InvalidRegistry(format!(
                    "region code {code} is too short for a NUTS1 code"
                )));
            }
            if !registry.countries.contains_key(&country) {
                return Err(CorpusError::InvalidRegistry(format!(
                    "region {code} references unknown country {country}"
                )));
            }
            let prefix = code[..code.len() - 1].to_string();
            match registry.nuts_prefix.get(&country) {
                Some(existing) if *existing != prefix => {
                    return Err(CorpusError::InvalidRegistry(format!(
                        "country {country} has regions with mixed prefixes {existing} and {prefix}"
                    )));
                }
                Some(_) => {}
                None => {
                    registry.nuts_prefix.insert(country.clone(), prefix);
                }
            }
            let entry = RegionEntry { name, country };
            if registry.regions.insert(code.clone(), entry).is_some() {
                return Err(CorpusError::InvalidRegistry(format!(
                    "duplicate region code {code}"
                )));
            }
        }
        Ok(registry)
    }

    /// Reads a registry from CSV with the header `code,name,parent`. Rows
    /// with an empty parent are countries; the rest are NUTS1 regions whose
    /// parent is a country code. Row order does not matter.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let mut rdr = csv::Reader::from_reader(reader);
        {
            let headers = rdr.headers().map_err(|e| CorpusError::InvalidRegistry(e.to_string()))?;
            if headers.iter().collect::<Vec<_>>() != ["code", "name", "parent"] {
                return Err(CorpusError::InvalidRegistry(format!(
                    "expected header code,name,parent, found {}",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut countries = Vec::new();
        let mut regions = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| CorpusError::InvalidRegistry(e.to_string()))?;
            let code = row[0].to_string();
            let name = row[1].to_string();
            let parent = row[2].to_string();
            if parent.is_empty() {
                countries.push((code, name));
            } else {
                regions.push((code, name, parent));
            }
        }
        Self::new(countries, regions)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            CorpusError::InvalidRegistry(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::from_csv_reader(file)
    }

    pub fn has_country(&self, code: &str) -> bool {
        self.countries.contains_key(code)
    }

    pub fn has_region(&self, code: &str) -> bool {
        self.regions.contains_key(code)
    }

    pub fn has_zone(&self, level: ZoneLevel, code: &str) -> bool {
        match level {
            ZoneLevel::Country => self.has_country(code),
            ZoneLevel::Nuts1 => self.has_region(code),
        }
    }

    pub fn zone_name(&self, level: ZoneLevel, code: &str) -> Option<&str> {
        match level {
            ZoneLevel::Country => self.countries.get(code).map(String::as_str),
            ZoneLevel::Nuts1 => self.regions.get(code).map(|r| r.name.as_str()),
        }
    }

    /// Country that a registered region belongs to.
    pub fn region_country(&self, region_code: &str) -> Option<&str> {
        self.regions.get(region_code).map(|r| r.country.as_str())
    }

    /// NUTS code prefix for a country, derived from its region rows. Absent
    /// when the registry lists no regions for the country.
    pub fn nuts_prefix(&self, country_code: &str) -> Option<&str> {
        self.nuts_prefix.get(country_code).map(String::as_str)
    }

    pub fn countries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.countries.iter().map(|(c, n)| (c.as_str(), n.as_str()))
    }

    pub fn regions(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.regions
            .iter()
            .map(|(c, r)| (c.as_str(), r.name.as_str(), r.country.as_str()))
    }
}
