//! Publication records and their constituent value types.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Document type of a publication. Analyses normally restrict to articles,
/// letters, and reviews; everything else is carried as `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocType {
    Article,
    Letter,
    Review,
    Other,
}

impl DocType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "article" => Some(Self::Article),
            "letter" => Some(Self::Letter),
            "review" => Some(Self::Review),
            "other" => Some(Self::Other),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Article => "article",
            Self::Letter => "letter",
            Self::Review => "review",
            Self::Other => "other",
        }
    }
}

impl std::fmt::Display for DocType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Open-access route under which a publication is available. A record may
/// carry several routes at once; an empty set means closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OaType {
    DoajGold,
    OtherGold,
    Bronze,
    Hybrid,
    GreenPublished,
    GreenAccepted,
    GreenOther,
}

impl OaType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "doaj_gold" => Some(Self::DoajGold),
            "other_gold" => Some(Self::OtherGold),
            "bronze" => Some(Self::Bronze),
            "hybrid" => Some(Self::Hybrid),
            "green_published" => Some(Self::GreenPublished),
            "green_accepted" => Some(Self::GreenAccepted),
            "green_other" => Some(Self::GreenOther),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DoajGold => "doaj_gold",
            Self::OtherGold => "other_gold",
            Self::Bronze => "bronze",
            Self::Hybrid => "hybrid",
            Self::GreenPublished => "green_published",
            Self::GreenAccepted => "green_accepted",
            Self::GreenOther => "green_other",
        }
    }
}

/// One author address: an ISO 3166 alpha-2 country code plus, when the
/// address could be geocoded, a NUTS level-1 region code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affiliation {
    pub country: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuts1: Option<String>,
}

/// A validated publication record.
///
/// `oa_types` and `subject_categories` use set semantics: duplicates in the
/// input collapse, so fractional weights and openness are invariant under
/// repetition or reordering of the raw lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub year: i32,
    pub doc_type: DocType,
    pub oa_types: BTreeSet<OaType>,
    pub subject_categories: BTreeSet<String>,
    pub affiliations: Vec<Affiliation>,
}

impl PublicationRecord {
    /// A record is open access when at least one OA route applies.
    pub fn is_open(&self) -> bool {
        !self.oa_types.is_empty()
    }
}

/// Free-function form of [`PublicationRecord::is_open`].
pub fn is_open(record: &PublicationRecord) -> bool {
    record.is_open()
}
