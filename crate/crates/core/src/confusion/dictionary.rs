//! Major confusions per phoneme from the TIMIT pronunciation dictionary and
//! from SVM confusion matrices, and the comparison between the two sources.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::ConfusionMatrix;
use crate::phoneme::{label, PhonemeLabel};

/// `(phoneme, dictionary confusions, classifier confusions)`, classifier
/// confusions in their listed order. `ax-h` is spelled `axh` in the source
/// table; the repeated `n` row with no dictionary entry is the flap `nx`.
const ROWS: &[(&str, &[&str], &[&str])] = &[
    ("iy", &["ix", "ih"], &["ey", "ih", "ix"]),
    ("ih", &["ix", "iy", "ax", "eh"], &["ix", "iy", "ax", "eh", "ey"]),
    ("eh", &["ih", "ix"], &["ix", "ae", "ah"]),
    ("ae", &["eh", "ix"], &["eh"]),
    ("ix", &["ih", "ax", "en", "iy"], &["ax", "ih", "ey", "iy", "eh", "axr"]),
    ("ax", &["ix", "ah", "ih"], &["ah", "ix", "ow", "axr"]),
    ("uw", &["ux", "ix", "uh"], &["ux", "ax", "ax-h"]),
    ("uh", &["ix", "er", "ax"], &["ax", "ix", "eh", "ah"]),
    ("ah", &["ax", "ix"], &["eh", "ax", "aa"]),
    ("ao", &["aa"], &["aa"]),
    ("aa", &["ah", "ao"], &["ah", "ao"]),
    ("er", &["axr", "ax"], &["axr", "eh", "ix"]),
    ("axr", &["er", "ax", "ix"], &["ax", "er", "ix"]),
    ("ey", &["eh"], &["ix", "iy", "ih"]),
    ("ay", &["aa"], &["aa", "eh"]),
    ("oy", &["ao", "ow"], &["ao", "eh", "ah"]),
    ("aw", &["aa"], &["aa", "ae", "ah"]),
    ("ow", &["ax", "uh"], &["ax", "ao", "ah", "aa"]),
    ("t", &["dx", "q", "d"], &["d", "k"]),
    ("k", &[], &["t", "d", "tcl", "p"]),
    ("q", &[], &["dx", "k", "d"]),
    ("b", &["v"], &["d", "dx", "q"]),
    ("d", &["dx", "t"], &["k", "dx", "t", "tcl"]),
    ("g", &[], &["k", "dx", "b"]),
    ("m", &["em"], &["n"]),
    ("n", &["nx", "en"], &["m"]),
    ("ng", &["n"], &["n"]),
    ("nx", &[], &["m"]),
    ("f", &[], &["th", "dh"]),
    ("th", &["dh", "t"], &["dh", "f", "s"]),
    ("v", &["f"], &["dh", "f"]),
    ("dh", &["th", "d"], &["th", "f", "v"]),
    ("z", &["s", "zh"], &["s", "sh"]),
    ("zh", &["jh", "z", "sh", "ch"], &["sh", "v", "f"]),
    ("ch", &["sh"], &["jh"]),
    ("r", &["axr", "er"], &["l", "y"]),
    ("y", &["ix", "ux"], &["r", "hv"]),
    ("em", &["m"], &["m"]),
    ("en", &["ix", "n"], &["n"]),
    ("el", &["l"], &["l", "w"]),
    ("hh", &["hv"], &["hv"]),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub dictionary: Vec<PhonemeLabel>,
    pub classifier: Vec<PhonemeLabel>,
}

impl TableEntry {
    pub fn dictionary_set(&self) -> BTreeSet<PhonemeLabel> {
        self.dictionary.iter().copied().collect()
    }

    pub fn classifier_set(&self) -> BTreeSet<PhonemeLabel> {
        self.classifier.iter().copied().collect()
    }
}

/// Per-phoneme dictionary and classifier confusions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PronunciationConfusionTable {
    /// Rows in table order.
    pub rows: Vec<(PhonemeLabel, TableEntry)>,
}

impl PronunciationConfusionTable {
    pub fn get(&self, l: PhonemeLabel) -> Option<&TableEntry> {
        self.rows.iter().find(|(k, _)| *k == l).map(|(_, e)| e)
    }

    pub fn dictionary_map(&self) -> BTreeMap<PhonemeLabel, Vec<PhonemeLabel>> {
        self.rows.iter().map(|(k, e)| (*k, e.dictionary.clone())).collect()
    }

    pub fn classifier_map(&self) -> BTreeMap<PhonemeLabel, Vec<PhonemeLabel>> {
        self.rows.iter().map(|(k, e)| (*k, e.classifier.clone())).collect()
    }
}

/// The embedded reference table.
pub fn pronunciation_table() -> PronunciationConfusionTable {
    let labels = |xs: &[&str]| xs.iter().map(|s| label(s)).collect::<Vec<_>>();
    PronunciationConfusionTable {
        rows: ROWS
            .iter()
            .map(|(p, dict, cls)| {
                (
                    label(p),
                    TableEntry {
                        dictionary: labels(dict),
                        classifier: labels(cls),
                    },
                )
            })
            .collect(),
    }
}

/// Canonical confusion matrix realizing the table's classifier column: each
/// listed row gets 100 correct tokens and `30, 28, 26, ...` tokens for its
/// confusions in listed order; unlisted labels get 100 correct tokens only.
pub fn table_confusion_matrix() -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::canonical();
    for l in PhonemeLabel::all() {
        cm.add(l, l, 100).expect("canonical label");
    }
    for (truth, entry) in pronunciation_table().rows {
        for (rank, &pred) in entry.classifier.iter().enumerate() {
            cm.add(truth, pred, 30 - 2 * rank as u64).expect("canonical label");
        }
    }
    cm
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComparisonRow {
    pub label: PhonemeLabel,
    pub observed: BTreeSet<PhonemeLabel>,
    pub dictionary: BTreeSet<PhonemeLabel>,
    pub intersection: BTreeSet<PhonemeLabel>,
    pub observed_only: BTreeSet<PhonemeLabel>,
    pub dictionary_only: BTreeSet<PhonemeLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComparisonSummary {
    pub labels: usize,
    /// Labels whose two sets are equal.
    pub identical: usize,
    pub observed_total: usize,
    pub dictionary_total: usize,
    pub shared_total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub summary: ComparisonSummary,
}

/// Set comparison per label over the table's rows plus any label with
/// observed confusions. Both per-label set sizes are reported; no claim
/// about which source has more confusions is made.
pub fn compare_with_dictionary(
    observed: &BTreeMap<PhonemeLabel, Vec<PhonemeLabel>>,
    table: &PronunciationConfusionTable,
) -> ComparisonReport {
    let mut keys: Vec<PhonemeLabel> = table.rows.iter().map(|(k, _)| *k).collect();
    for (k, v) in observed {
        if !v.is_empty() && !keys.contains(k) {
            keys.push(*k);
        }
    }
    let rows: Vec<ComparisonRow> = keys
        .into_iter()
        .map(|l| {
            let obs: BTreeSet<_> = observed.get(&l).into_iter().flatten().copied().collect();
            let dict = table.get(l).map(TableEntry::dictionary_set).unwrap_or_default();
            ComparisonRow {
                label: l,
                intersection: obs.intersection(&dict).copied().collect(),
                observed_only: obs.difference(&dict).copied().collect(),
                dictionary_only: dict.difference(&obs).copied().collect(),
                observed: obs,
                dictionary: dict,
            }
        })
        .collect();
    let summary = ComparisonSummary {
        labels: rows.len(),
        identical: rows.iter().filter(|r| r.observed == r.dictionary).count(),
        observed_total: rows.iter().map(|r| r.observed.len()).sum(),
        dictionary_total: rows.iter().map(|r| r.dictionary.len()).sum(),
        shared_total: rows.iter().map(|r| r.intersection.len()).sum(),
    };
    ComparisonReport { rows, summary }
}

fn join(set: &BTreeSet<PhonemeLabel>) -> String {
    if set.is_empty() {
        "-".to_string()
    } else {
        set.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(" ")
    }
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8}{:<28}{:<28}{:<20}{:<20}dictionary-only",
            "phoneme", "observed", "dictionary", "shared", "observed-only"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<8}{:<28}{:<28}{:<20}{:<20}{}",
                r.label.as_str(),
                join(&r.observed),
                join(&r.dictionary),
                join(&r.intersection),
                join(&r.observed_only),
                join(&r.dictionary_only)
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "\n{} labels, {} identical; {} observed confusions, {} dictionary confusions, {} shared",
            s.labels, s.identical, s.observed_total, s.dictionary_total, s.shared_total
        );
        out
    }

    /// Columns `phoneme,observed,dictionary,shared,observed_only,dictionary_only`;
    /// set members are space-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phoneme,observed,dictionary,shared,observed_only,dictionary_only\n");
        let cell = |s: &BTreeSet<PhonemeLabel>| s.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(" ");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.label,
                cell(&r.observed),
                cell(&r.dictionary),
                cell(&r.intersection),
                cell(&r.observed_only),
                cell(&r.dictionary_only)
            );
        }
        out
    }
}
