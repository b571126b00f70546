//! Confusion-matrix accounting and analysis.
//!
//! Rows are true labels, columns predicted labels. Besides per-phoneme
//! recognition rates this module extracts each label's major confusions,
//! compares them against the pronunciation-dictionary table, and clusters
//! labels into groups of mutually confused phonemes.

mod dictionary;
mod graph;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::phoneme::PhonemeLabel;

pub use dictionary::{
    compare_with_dictionary, pronunciation_table, table_confusion_matrix, ComparisonReport, ComparisonRow,
    ComparisonSummary, PronunciationConfusionTable, TableEntry,
};
pub use graph::{components_with_cap, confusion_graph_components, edge_weight};

#[derive(Debug, Error)]
pub enum ConfusionError {
    #[error("label {0} is not part of the matrix")]
    UnknownLabel(PhonemeLabel),
    #[error("duplicate label {0} in matrix header")]
    DuplicateLabel(PhonemeLabel),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("confusion CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<PhonemeLabel>,
    index: HashMap<PhonemeLabel, usize>,
    counts: Vec<Vec<u64>>,
}

impl Serialize for ConfusionMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ConfusionMatrix", 2)?;
        s.serialize_field("labels", &self.labels)?;
        s.serialize_field("counts", &self.counts)?;
        s.end()
    }
}

impl ConfusionMatrix {
    pub fn zeros(labels: &[PhonemeLabel]) -> Result<Self, ConfusionError> {
        let mut index = HashMap::new();
        for (i, &l) in labels.iter().enumerate() {
            if index.insert(l, i).is_some() {
                return Err(ConfusionError::DuplicateLabel(l));
            }
        }
        Ok(ConfusionMatrix {
            labels: labels.to_vec(),
            index,
            counts: vec![vec![0; labels.len()]; labels.len()],
        })
    }

    /// Zero matrix over all 60 labels, sorted by symbol.
    pub fn canonical() -> Self {
        Self::zeros(&PhonemeLabel::all_sorted()).expect("inventory has no duplicates")
    }

    pub fn from_counts(labels: &[PhonemeLabel], counts: Vec<Vec<u64>>) -> Result<Self, ConfusionError> {
        let mut cm = Self::zeros(labels)?;
        if counts.len() != labels.len() || counts.iter().any(|r| r.len() != labels.len()) {
            return Err(ConfusionError::InvalidParameter(format!(
                "counts must be {0}x{0}",
                labels.len()
            )));
        }
        cm.counts = counts;
        Ok(cm)
    }

    /// Counts `(true, predicted)` pairs over the given label set.
    pub fn accumulate(
        labels: &[PhonemeLabel],
        pairs: impl IntoIterator<Item = (PhonemeLabel, PhonemeLabel)>,
    ) -> Result<Self, ConfusionError> {
        let mut cm = Self::zeros(labels)?;
        for (t, p) in pairs {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn accumulate_canonical(
        pairs: impl IntoIterator<Item = (PhonemeLabel, PhonemeLabel)>,
    ) -> Result<Self, ConfusionError> {
        Self::accumulate(&PhonemeLabel::all_sorted(), pairs)
    }

    pub fn record(&mut self, truth: PhonemeLabel, predicted: PhonemeLabel) -> Result<(), ConfusionError> {
        self.add(truth, predicted, 1)
    }

    pub fn add(&mut self, truth: PhonemeLabel, predicted: PhonemeLabel, n: u64) -> Result<(), ConfusionError> {
        let t = self.position(truth)?;
        let p = self.position(predicted)?;
        self.counts[t][p] += n;
        Ok(())
    }

    pub fn labels(&self) -> &[PhonemeLabel] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn position(&self, l: PhonemeLabel) -> Result<usize, ConfusionError> {
        self.index.get(&l).copied().ok_or(ConfusionError::UnknownLabel(l))
    }

    pub fn contains(&self, l: PhonemeLabel) -> bool {
        self.index.contains_key(&l)
    }

    pub fn count(&self, truth: PhonemeLabel, predicted: PhonemeLabel) -> Result<u64, ConfusionError> {
        Ok(self.counts[self.position(truth)?][self.position(predicted)?])
    }

    pub fn row_sum(&self, truth: PhonemeLabel) -> Result<u64, ConfusionError> {
        Ok(self.counts[self.position(truth)?].iter().sum())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// `counts[a][b] / rowsum(a)`, or 0 for an empty row.
    pub fn fraction(&self, truth: PhonemeLabel, predicted: PhonemeLabel) -> Result<f64, ConfusionError> {
        let sum = self.row_sum(truth)?;
        Ok(if sum == 0 {
            0.0
        } else {
            self.count(truth, predicted)? as f64 / sum as f64
        })
    }

    /// Same counts with rows and columns reordered to `order`.
    pub fn reordered(&self, order: &[PhonemeLabel]) -> Result<Self, ConfusionError> {
        if order.len() != self.labels.len() {
            return Err(ConfusionError::InvalidParameter(
                "order must list every label once".into(),
            ));
        }
        let mut out = Self::zeros(order)?;
        for &t in order {
            for &p in order {
                out.add(t, p, self.count(t, p)?)?;
            }
        }
        Ok(out)
    }

    /// Header row `true,<labels...>`, then one row per true label.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), ConfusionError> {
        let mut header = String::from("true");
        for l in &self.labels {
            let _ = write!(header, ",{l}");
        }
        writeln!(out, "{header}")?;
        for (l, row) in self.labels.iter().zip(&self.counts) {
            let mut line = l.to_string();
            for c in row {
                let _ = write!(line, ",{c}");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, ConfusionError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| {
            l.as_ref()
                .map(|s| !s.trim().is_empty() && !s.starts_with('#'))
                .unwrap_or(true)
        });
        let err = |line: usize, reason: String| ConfusionError::Csv { line, reason };
        let (hidx, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let header = header?;
        let labels = header
            .split(',')
            .skip(1)
            .map(|s| PhonemeLabel::parse(s).map_err(|e| err(hidx + 1, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cm = Self::zeros(&labels)?;
        let mut seen = vec![false; labels.len()];
        for (idx, line) in lines {
            let line = line?;
            let n = idx + 1;
            let mut fields = line.split(',');
            let truth = PhonemeLabel::parse(fields.next().unwrap_or_default()).map_err(|e| err(n, e.to_string()))?;
            let row = cm.position(truth).map_err(|e| err(n, e.to_string()))?;
            if std::mem::replace(&mut seen[row], true) {
                return Err(err(n, format!("duplicate row for {truth}")));
            }
            let values = fields
                .map(|f| f.trim().parse::<u64>().map_err(|_| err(n, format!("bad count {f:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != labels.len() {
                return Err(err(
                    n,
                    format!("expected {} counts, got {}", labels.len(), values.len()),
                ));
            }
            cm.counts[row] = values;
        }
        Ok(cm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallRow {
    pub label: PhonemeLabel,
    pub tokens: u64,
    pub correct: u64,
    /// `None` when the label has no test tokens.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionReport {
    pub system: String,
    pub rows: Vec<RecallRow>,
    pub total: u64,
    pub correct: u64,
    pub overall: Option<f64>,
}

impl RecognitionReport {
    pub fn recall(&self, l: PhonemeLabel) -> Option<f64> {
        self.rows.iter().find(|r| r.label == l).and_then(|r| r.recall)
    }

    /// Mean recall over `labels`, skipping labels without tokens.
    pub fn mean_recall(&self, labels: &[PhonemeLabel]) -> Option<f64> {
        let values: Vec<f64> = labels.iter().filter_map(|&l| self.recall(l)).collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn per_class_recall(cm: &ConfusionMatrix, system: &str) -> RecognitionReport {
    let rows = cm
        .labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let tokens: u64 = cm.counts[i].iter().sum();
            let correct = cm.counts[i][i];
            RecallRow {
                label,
                tokens,
                correct,
                recall: (tokens > 0).then(|| correct as f64 / tokens as f64),
            }
        })
        .collect();
    let total = cm.total();
    let correct = cm.trace();
    RecognitionReport {
        system: system.to_string(),
        rows,
        total,
        correct,
        overall: (total > 0).then(|| correct as f64 / total as f64),
    }
}

/// For every true label, the off-diagonal columns holding at least
/// `min_fraction` of its row, by descending fraction (ties by label), at most `k`.
pub fn major_confusions(
    cm: &ConfusionMatrix,
    k: usize,
    min_fraction: f64,
) -> Result<BTreeMap<PhonemeLabel, Vec<PhonemeLabel>>, ConfusionError> {
    if k == 0 {
        return Err(ConfusionError::InvalidParameter("k must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&min_fraction) {
        return Err(ConfusionError::InvalidParameter(
            "min_fraction must lie in [0, 1)".into(),
        ));
    }
    let mut out = BTreeMap::new();
    for (i, &truth) in cm.labels.iter().enumerate() {
        let sum: u64 = cm.counts[i].iter().sum();
        let mut candidates: Vec<(f64, PhonemeLabel)> = Vec::new();
        if sum > 0 {
            for (j, &pred) in cm.labels.iter().enumerate() {
                let c = cm.counts[i][j];
                let frac = c as f64 / sum as f64;
                if j != i && c > 0 && frac >= min_fraction {
                    candidates.push((frac, pred));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        out.insert(truth, candidates.into_iter().take(k).map(|(_, l)| l).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phoneme::label;

    fn l(s: &str) -> PhonemeLabel {
        label(s)
    }

    #[test]
    fn accumulate_counts() {
        let labels = [l("aa"), l("ae")];
        let perfect = [(l("aa"), l("aa")); 3].into_iter().chain([(l("ae"), l("ae")); 2]);
        let cm = ConfusionMatrix::accumulate(&labels, perfect).unwrap();
        assert_eq!(cm.counts(), &[vec![3, 0], vec![0, 2]]);

        let empty = ConfusionMatrix::accumulate(&labels, []).unwrap();
        assert_eq!(empty.total(), 0);

        let mixed = [(l("aa"), l("ae")), (l("aa"), l("ae")), (l("ae"), l("aa"))];
        let cm = ConfusionMatrix::accumulate(&labels, mixed).unwrap();
        assert_eq!(cm.count(l("aa"), l("ae")).unwrap(), 2);
        assert_eq!(cm.count(l("ae"), l("aa")).unwrap(), 1);
        assert_eq!(cm.total(), 3);

        assert!(matches!(
            ConfusionMatrix::accumulate(&labels, [(l("aa"), l("iy"))]),
            Err(ConfusionError::UnknownLabel(_))
        ));
    }

    #[test]
    fn recall_arithmetic() {
        let cm = ConfusionMatrix::from_counts(&[l("aa"), l("ae")], vec![vec![9, 1], vec![2, 8]]).unwrap();
        let r = per_class_recall(&cm, "x");
        assert_eq!(r.recall(l("aa")), Some(0.9));
        assert_eq!(r.recall(l("ae")), Some(0.8));
        assert_eq!(r.overall, Some(17.0 / 20.0));

        let zero = ConfusionMatrix::zeros(&[l("aa"), l("ae")]).unwrap();
        let r = per_class_recall(&zero, "x");
        assert!(r.rows.iter().all(|row| row.recall.is_none()));
        assert_eq!(r.overall, None);

        let diag = ConfusionMatrix::from_counts(&[l("aa"), l("ae")], vec![vec![4, 0], vec![0, 7]]).unwrap();
        assert!(per_class_recall(&diag, "x")
            .rows
            .iter()
            .all(|row| row.recall == Some(1.0)));
    }

    #[test]
    fn major_confusions_stated_row() {
        let labels = [l("iy"), l("ey"), l("ih"), l("ix"), l("aa")];
        let mut cm = ConfusionMatrix::zeros(&labels).unwrap();
        for (p, n) in [("iy", 50), ("ey", 20), ("ih", 15), ("ix", 10), ("aa", 4)] {
            cm.add(l("iy"), l(p), n).unwrap();
        }
        let major = major_confusions(&cm, 3, 0.08).unwrap();
        assert_eq!(major[&l("iy")], vec![l("ey"), l("ih"), l("ix")]);
        assert!(major[&l("aa")].is_empty());
    }

    #[test]
    fn major_confusions_ties_and_params() {
        let labels = [l("aa"), l("ae"), l("ah")];
        let cm = ConfusionMatrix::from_counts(&labels, vec![vec![2, 1, 1], vec![0, 1, 0], vec![0, 0, 3]]).unwrap();
        let major = major_confusions(&cm, 6, 0.0).unwrap();
        assert_eq!(major[&l("aa")], vec![l("ae"), l("ah")]);
        assert_eq!(major_confusions(&cm, 1, 0.0).unwrap()[&l("aa")], vec![l("ae")]);
        assert!(major_confusions(&cm, 0, 0.1).is_err());
        assert!(major_confusions(&cm, 1, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let cm = ConfusionMatrix::from_counts(&[l("h#"), l("ax-h")], vec![vec![3, 1], vec![0, 12]]).unwrap();
        let mut buf = Vec::new();
        cm.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "true,h#,ax-h\nh#,3,1\nax-h,0,12\n"
        );
        assert_eq!(ConfusionMatrix::read_csv(buf.as_slice()).unwrap(), cm);
        assert!(ConfusionMatrix::read_csv("true,aa\naa,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn reorder_preserves_counts() {
        let cm = ConfusionMatrix::from_counts(&[l("aa"), l("ae")], vec![vec![1, 2], vec![3, 4]]).unwrap();
        let r = cm.reordered(&[l("ae"), l("aa")]).unwrap();
        assert_eq!(r.counts(), &[vec![4, 3], vec![2, 1]]);
        assert_eq!(r.count(l("aa"), l("ae")).unwrap(), 2);
    }
}
