//! Deterministic synthetic corpora for tests, benchmarks, and demos.
//!
//! Everything here is seeded: the same options always produce the same
//! records, so fixtures built from this module are reproducible across runs
//! and machines.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    Affiliation, DocType, OaType, PublicationRecord, SubjectScheme, ZoneRegistry,
};

/// A small subject scheme with eleven disciplines, enough to exercise
/// fractionalization across discipline boundaries.
pub fn demo_scheme() -> SubjectScheme {
    let groups: [(&str, &[&str]); 11] = [
        (
            "Fundamental biology",
            &[
                "Biochemistry & Molecular Biology",
                "Cell Biology",
                "Genetics & Heredity",
                "Microbiology",
            ],
        ),
        (
            "Medical research",
            &[
                "Medicine, General & Internal",
                "Oncology",
                "Public, Environmental & Occupational Health",
                "Primary Health Care",
            ],
        ),
        (
            "Applied biology & ecology",
            &["Ecology", "Plant Sciences", "Agronomy", "Zoology"],
        ),
        (
            "Earth & astronomy",
            &[
                "Astronomy & Astrophysics",
                "Geosciences, Multidisciplinary",
                "Meteorology & Atmospheric Sciences",
                "Oceanography",
            ],
        ),
        (
            "Social sciences",
            &[
                "Economics",
                "Sociology",
                "Political Science",
                "Psychology, Multidisciplinary",
            ],
        ),
        (
            "Physics",
            &[
                "Physics, Multidisciplinary",
                "Physics, Applied",
                "Optics",
                "Physics, Condensed Matter",
            ],
        ),
        (
            "Chemistry",
            &[
                "Chemistry, Multidisciplinary",
                "Chemistry, Organic",
                "Chemistry, Physical",
                "Electrochemistry",
            ],
        ),
        (
            "Mathematics",
            &["Mathematics", "Mathematics, Applied", "Statistics & Probability"],
        ),
        (
            "Humanities",
            &["History", "Philosophy", "Linguistics", "Literature"],
        ),
        (
            "Engineering",
            &[
                "Engineering, Electrical & Electronic",
                "Engineering, Mechanical",
                "Engineering, Civil",
                "Materials Science, Multidisciplinary",
            ],
        ),
        (
            "Computer science",
            &[
                "Computer Science, Artificial Intelligence",
                "Computer Science, Information Systems",
                "Computer Science, Theory & Methods",
                "Medical Informatics",
            ],
        ),
    ];
    let pairs: Vec<(String, String)> = groups
        .iter()
        .flat_map(|(discipline, scs)| {
            scs.iter()
                .map(|sc| (sc.to_string(), discipline.to_string()))
        })
        .collect();
    SubjectScheme::new(pairs).expect("demo scheme is valid")
}

/// A registry of twelve countries and their NUTS1 regions, including the two
/// countries whose region codes use a different prefix (GB uses UK, GR uses
/// EL) and one country without regions (CH).
pub fn demo_registry() -> ZoneRegistry {
    let countries: [(&str, &str); 12] = [
        ("AT", "Austria"),
        ("CH", "Switzerland"),
        ("DE", "Germany"),
        ("ES", "Spain"),
        ("FR", "France"),
        ("GB", "United Kingdom"),
        ("GR", "Greece"),
        ("IT", "Italy"),
        ("NL", "Netherlands"),
        ("NO", "Norway"),
        ("PL", "Poland"),
        ("PT", "Portugal"),
    ];
    let regions: [(&str, &str, &str); 27] = [
        ("AT1", "Ostoesterreich", "AT"),
        ("AT2", "Suedoesterreich", "AT"),
        ("DE1", "Baden-Wuerttemberg", "DE"),
        ("DE2", "Bayern", "DE"),
        ("DE3", "Berlin", "DE"),
        ("DE7", "Hessen", "DE"),
        ("ES3", "Comunidad de Madrid", "ES"),
        ("ES5", "Este", "ES"),
        ("FR1", "Ile-de-France", "FR"),
        ("FRK", "Auvergne-Rhone-Alpes", "FR"),
        ("FRL", "Provence-Alpes-Cote d'Azur", "FR"),
        ("UKD", "North West England", "GB"),
        ("UKI", "London", "GB"),
        ("UKJ", "South East England", "GB"),
        ("UKM", "Scotland", "GB"),
        ("EL3", "Attiki", "GR"),
        ("EL4", "Nisia Aigaiou, Kriti", "GR"),
        ("EL5", "Voreia Ellada", "GR"),
        ("ITC", "Nord-Ovest", "IT"),
        ("ITF", "Sud", "IT"),
        ("ITI", "Centro", "IT"),
        ("NL1", "Noord-Nederland", "NL"),
        ("NL3", "West-Nederland", "NL"),
        ("NO0", "Norge", "NO"),
        ("PL2", "Makroregion Poludniowy", "PL"),
        ("PL9", "Makroregion Wojewodztwo Mazowieckie", "PL"),
        ("PT1", "Continente", "PT"),
    ];
    ZoneRegistry::new(
        countries
            .iter()
            .map(|(c, n)| (c.to_string(), n.to_string()))
            .collect(),
        regions
            .iter()
            .map(|(c, n, p)| (c.to_string(), n.to_string(), p.to_string()))
            .collect(),
    )
    .expect("demo registry is valid")
}

/// Knobs for the synthetic corpus generator.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub n: usize,
    pub seed: u64,
    /// Probability that a record is open access.
    pub oa_rate: f64,
    /// Subject categories per record, uniform in 1..=max_scs.
    pub max_scs: usize,
    /// Affiliations per record, uniform in 1..=max_affils.
    pub max_affils: usize,
    /// Probability that an affiliation omits its NUTS1 code.
    pub nuts1_missing_rate: f64,
    /// Probability that an affiliation carries an unregistered country.
    pub unknown_country_rate: f64,
    pub year_min: i32,
    pub year_max: i32,
    /// Probability of a document type outside article, letter, and review.
    pub other_doc_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 42,
            oa_rate: 0.35,
            max_scs: 4,
            max_affils: 3,
            nuts1_missing_rate: 0.05,
            unknown_country_rate: 0.02,
            year_min: 2000,
            year_max: 2018,
            other_doc_rate: 0.05,
        }
    }
}

const OA_MENU: [OaType; 7] = [
    OaType::DoajGold,
    OaType::OtherGold,
    OaType::Bronze,
    OaType::Hybrid,
    OaType::GreenPublished,
    OaType::GreenAccepted,
    OaType::GreenOther,
];

/// Generates a corpus of valid records. Every record parses cleanly through
/// ingestion; anomalies that ingestion accepts but reports (missing NUTS1
/// codes, unknown countries) appear at the configured rates.
pub fn synth_records(
    options: &SynthOptions,
    scheme: &SubjectScheme,
    registry: &ZoneRegistry,
) -> Vec<PublicationRecord> {
    assert!(options.year_min <= options.year_max);
    assert!(options.max_scs >= 1 && options.max_affils >= 1);
    for rate in [
        options.oa_rate,
        options.nuts1_missing_rate,
        options.unknown_country_rate,
        options.other_doc_rate,
    ] {
        assert!((0.0..=1.0).contains(&rate));
    }
    let scs: Vec<&str> = scheme.subject_categories().collect();
    let countries: Vec<&str> = registry.countries().map(|(code, _)| code).collect();
    let mut regions_by_country: std::collections::BTreeMap<&str, Vec<&str>> =
        std::collections::BTreeMap::new();
    for (code, _, country) in registry.regions() {
        regions_by_country.entry(country).or_default().push(code);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut records = Vec::with_capacity(options.n);
    for i in 0..options.n {
        let doc_type = if rng.gen_bool(options.other_doc_rate) {
            DocType::Other
        } else {
            match rng.gen_range(0..10) {
                0 => DocType::Letter,
                1 => DocType::Review,
                _ => DocType::Article,
            }
        };
        let year = rng.gen_range(options.year_min..=options.year_max);
        let mut oa_types = std::collections::BTreeSet::new();
        if rng.gen_bool(options.oa_rate) {
            let routes = rng.gen_range(1..=2);
            while oa_types.len() < routes {
                oa_types.insert(OA_MENU[rng.gen_range(0..OA_MENU.len())]);
            }
        }
        let sc_count = rng.gen_range(1..=options.max_scs.min(scs.len()));
        let mut subject_categories = std::collections::BTreeSet::new();
        while subject_categories.len() < sc_count {
            subject_categories.insert(scs[rng.gen_range(0..scs.len())].to_string());
        }
        let affil_count = rng.gen_range(1..=options.max_affils);
        let mut affiliations = Vec::with_capacity(affil_count);
        for _ in 0..affil_count {
            if rng.gen_bool(options.unknown_country_rate) {
                affiliations.push(Affiliation {
                    country: "XX".to_string(),
                    nuts1: None,
                });
                continue;
            }
            let country = countries[rng.gen_range(0..countries.len())];
            let nuts1 = match regions_by_country.get(country) {
                Some(codes) if !rng.gen_bool(options.nuts1_missing_rate) => {
                    Some(codes[rng.gen_range(0..codes.len())].to_string())
                }
                _ => None,
            };
            affiliations.push(Affiliation {
                country: country.to_string(),
                nuts1,
            });
        }
        records.push(PublicationRecord {
            pub_id: format!("P{i:07}"),
            year,
            doc_type,
            oa_types,
            subject_categories,
            affiliations,
        });
    }
    records
}

/// Writes records as JSON Lines, one record per line.
pub fn write_jsonl<W: Write>(records: &[PublicationRecord], mut writer: W) -> io::Result<()> {
    for record in records {
        let line = serde_json::to_string(record)?;
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_publications, InputFormat};
    use std::io::BufReader;

    #[test]
    fn demo_fixtures_are_consistent() {
        let scheme = demo_scheme();
        assert_eq!(scheme.disciplines().len(), 11);
        assert_eq!(scheme.len(), 43);
        let registry = demo_registry();
        assert_eq!(registry.countries().count(), 12);
        assert_eq!(registry.regions().count(), 27);
        assert_eq!(registry.nuts_prefix("GB"), Some("UK"));
        assert_eq!(registry.nuts_prefix("GR"), Some("EL"));
        assert_eq!(registry.nuts_prefix("CH"), None);
    }

    #[test]
    fn generation_is_deterministic() {
        let opts = SynthOptions {
            n: 200,
            ..SynthOptions::default()
        };
        let a = synth_records(&opts, &demo_scheme(), &demo_registry());
        let b = synth_records(&opts, &demo_scheme(), &demo_registry());
        assert_eq!(a, b);
        let c = synth_records(
            &SynthOptions { seed: 43, ..opts },
            &demo_scheme(),
            &demo_registry(),
        );
        assert_ne!(a, c);
    }

    #[test]
    fn generated_corpus_ingests_cleanly() {
        let scheme = demo_scheme();
        let registry = demo_registry();
        let opts = SynthOptions {
            n: 500,
            ..SynthOptions::default()
        };
        let records = synth_records(&opts, &scheme, &registry);
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let (parsed, report) = parse_publications(
            BufReader::new(buf.as_slice()),
            InputFormat::JsonLines,
            &scheme,
            &registry,
        )
        .unwrap();
        assert_eq!(report.total_lines, 500);
        assert_eq!(report.accepted, 500);
        assert_eq!(report.rejected, 0);
        assert_eq!(parsed, records);
        assert!(report.region_unattributable_records > 0);
        assert!(report.unknown_country_affiliations > 0);
    }

    #[test]
    fn corpus_mixes_open_and_closed_records() {
        let records = synth_records(&SynthOptions::default(), &demo_scheme(), &demo_registry());
        let open = records.iter().filter(|r| r.is_open()).count();
        assert!(open > 200 && open < 500, "open count {open}");
        let multi_sc = records
            .iter()
            .filter(|r| r.subject_categories.len() > 1)
            .count();
        assert!(multi_sc > 0);
        let multi_zone = records.iter().filter(|r| r.affiliations.len() > 1).count();
        assert!(multi_zone > 0);
    }
}
