//! The TIMIT phonetic label inventory and its traditional articulatory grouping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Articulatory sub-groups used by the traditional two-level hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BroadClass {
    Vowels,
    Semivowels,
    Stops,
    OtherStops,
    Nasals,
    Affricates,
    Fricatives,
}

impl BroadClass {
    pub const ALL: [BroadClass; 7] = [
        BroadClass::Vowels,
        BroadClass::Semivowels,
        BroadClass::Stops,
        BroadClass::OtherStops,
        BroadClass::Nasals,
        BroadClass::Affricates,
        BroadClass::Fricatives,
    ];

    /// Node name used in hierarchy files.
    pub fn name(self) -> &'static str {
        match self {
            BroadClass::Vowels => "vowels",
            BroadClass::Semivowels => "semivowels",
            BroadClass::Stops => "stops",
            BroadClass::OtherStops => "other-stops",
            BroadClass::Nasals => "nasals",
            BroadClass::Affricates => "affricates",
            BroadClass::Fricatives => "fricatives",
        }
    }

    pub fn members(self) -> &'static [&'static str] {
        SUB_GROUPS
            .iter()
            .find(|(class, _)| *class == self)
            .map(|(_, members)| *members)
            .expect("every broad class has a member list")
    }
}

impl fmt::Display for BroadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 60 labels grouped by articulatory class, in the traditional order.
pub const SUB_GROUPS: [(BroadClass, &[&str]); 7] = [
    (
        BroadClass::Vowels,
        &[
            "aa", "ae", "ah", "ao", "aw", "ax", "ax-h", "axr", "ay", "eh", "er", "ey", "ih", "ix", "iy", "ow", "oy",
            "uh", "uw", "ux",
        ],
    ),
    (BroadClass::Semivowels, &["l", "r", "w", "y", "hh", "hv", "el"]),
    (
        BroadClass::Stops,
        &[
            "b", "d", "g", "p", "t", "k", "dx", "q", "bcl", "dcl", "gcl", "pcl", "tcl", "kcl",
        ],
    ),
    (BroadClass::OtherStops, &["pau", "epi", "h#"]),
    (BroadClass::Nasals, &["m", "n", "ng", "em", "en", "nx"]),
    (BroadClass::Affricates, &["ch", "jh"]),
    (BroadClass::Fricatives, &["s", "sh", "z", "zh", "f", "th", "v", "dh"]),
];

pub const LABEL_COUNT: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown phoneme label {0:?}")]
pub struct UnknownLabel(pub String);

/// One of the 60 canonical TIMIT phonetic labels.
///
/// Labels are interned: the wrapped string always points into the static
/// inventory, so comparison and hashing are by symbol.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhonemeLabel(&'static str);

impl PhonemeLabel {
    /// Parses a label, lowercasing it first (`"Bcl"` and `"bcl"` are the same label).
    pub fn parse(symbol: &str) -> Result<Self, UnknownLabel> {
        let lowered = symbol.trim().to_ascii_lowercase();
        SUB_GROUPS
            .iter()
            .flat_map(|(_, members)| members.iter())
            .find(|m| **m == lowered)
            .map(|m| PhonemeLabel(m))
            .ok_or_else(|| UnknownLabel(symbol.to_string()))
    }

    pub fn as_str(self) -> &'static str {
        self.0
    }

    pub fn broad_class(self) -> BroadClass {
        SUB_GROUPS
            .iter()
            .find(|(_, members)| members.contains(&self.0))
            .map(|(class, _)| *class)
            .expect("interned labels belong to a group")
    }

    pub fn is_vowel(self) -> bool {
        self.broad_class() == BroadClass::Vowels
    }

    /// All 60 labels in inventory order (grouped by broad class).
    pub fn all() -> Vec<PhonemeLabel> {
        SUB_GROUPS
            .iter()
            .flat_map(|(_, members)| members.iter().map(|m| PhonemeLabel(m)))
            .collect()
    }

    /// All 60 labels sorted by symbol.
    pub fn all_sorted() -> Vec<PhonemeLabel> {
        let mut labels = Self::all();
        labels.sort();
        labels
    }
}

impl fmt::Debug for PhonemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/", self.0)
    }
}

impl fmt::Display for PhonemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl FromStr for PhonemeLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for PhonemeLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.0)
    }
}

impl<'de> Deserialize<'de> for PhonemeLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        PhonemeLabel::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and embedded tables; panics on an unknown symbol.
pub fn label(symbol: &str) -> PhonemeLabel {
    PhonemeLabel::parse(symbol).unwrap_or_else(|e| panic!("{e}"))
}
