//! Subject-category scheme: the mapping from fine-grained subject categories
//! to the broader disciplines used for specialization and reporting.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use super::CorpusError;

/// Maps every subject category (SC) to exactly one discipline.
///
/// The discipline list preserves declaration order from the source so that
/// reports keep a stable, intentional column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectScheme {
    sc_to_discipline: BTreeMap<String, String>,
    disciplines: Vec<String>,
}

impl SubjectScheme {
    /// Builds a scheme from `(sc_code, discipline)` pairs. The discipline
    /// list is derived in first-appearance order. Conflicting duplicate SC
    /// rows are an error; exact duplicates collapse.
    pub fn new<I>(pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut sc_to_discipline = BTreeMap::new();
        let mut disciplines: Vec<String> = Vec::new();
        for (sc, discipline) in pairs {
            if sc.trim().is_empty() || discipline.trim().is_empty() {
                return Err(CorpusError::InvalidScheme(
                    "blank sc_code or discipline".to_string(),
                ));
            }
            match sc_to_discipline.get(&sc) {
                Some(existing) if *existing != discipline => {
                    return Err(CorpusError::InvalidScheme(format!(
                        "subject category {sc} mapped to both {existing} and {discipline}"
                    )));
                }
                Some(_) => continue,
                None => {
                    if !disciplines.iter().any(|d| *d == discipline) {
                        disciplines.push(discipline.clone());
                    }
                    sc_to_discipline.insert(sc, discipline);
                }
            }
        }
        if sc_to_discipline.is_empty() {
            return Err(CorpusError::InvalidScheme("scheme has no subject categories".into()));
        }
        Ok(Self {
            sc_to_discipline,
            disciplines,
        })
    }

    /// Reads a scheme from CSV with the header `sc_code,discipline`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let mut rdr = csv::Reader::from_reader(reader);
        {
            let headers = rdr.headers().map_err(|e| CorpusError::InvalidScheme(e.to_string()))?;
            if headers.iter().collect::<Vec<_>>() != ["sc_code", "discipline"] {
                return Err(CorpusError::InvalidScheme(format!(
                    "expected header sc_code,discipline, found {}",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut pairs = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| CorpusError::InvalidScheme(e.to_string()))?;
            pairs.push((row[0].to_string(), row[1].to_string()));
        }
        Self::new(pairs)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            CorpusError::InvalidScheme(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::from_csv_reader(file)
    }

    pub fn discipline_of(&self, sc: &str) -> Option<&str> {
        self.sc_to_discipline.get(sc).map(String::as_str)
    }

    pub fn contains_sc(&self, sc: &str) -> bool {
        self.sc_to_discipline.contains_key(sc)
    }

    /// Declared disciplines in declaration order. Every entry has at least
    /// one subject category by construction.
    pub fn disciplines(&self) -> &[String] {
        &self.disciplines
    }

    pub fn subject_categories(&self) -> impl Iterator<Item = &str> {
        self.sc_to_discipline.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.sc_to_discipline.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sc_to_discipline.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_from_pairs_and_keeps_declaration_order() {
        let scheme = SubjectScheme::new([
            ("SC_B".to_string(), "Physics".to_string()),
            ("SC_A".to_string(), "Chemistry".to_string()),
            ("SC_C".to_string(), "Physics".to_string()),
        ])
        .unwrap();
        assert_eq!(scheme.disciplines(), ["Physics", "Chemistry"]);
        assert_eq!(scheme.discipline_of("SC_C"), Some("Physics"));
        assert_eq!(scheme.discipline_of("SC_X"), None);
        assert_eq!(scheme.len(), 3);
    }

    #[test]
    fn conflicting_duplicate_is_rejected() {
        let err = SubjectScheme::new([
            ("SC_A".to_string(), "Physics".to_string()),
            ("SC_A".to_string(), "Chemistry".to_string()),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("SC_A"));
    }

    #[test]
    fn csv_round_trip() {
        let csv = "sc_code,discipline\nSC_MED_INFO,Computer science\nSC_PRIM_CARE,Medical research\n";
        let scheme = SubjectScheme::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(scheme.discipline_of("SC_MED_INFO"), Some("Computer science"));
        assert_eq!(scheme.disciplines().len(), 2);
    }

    #[test]
    fn csv_header_is_checked() {
        let csv = "code,field\nSC_A,Physics\n";
        assert!(SubjectScheme::from_csv_reader(csv.as_bytes()).is_err());
    }
}
