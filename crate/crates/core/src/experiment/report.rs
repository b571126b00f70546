use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{reference_rate, ExperimentError, ExperimentReport, System};
use crate::confusion::{ConfusionMatrix, RecallRow, RecognitionReport};
use crate::phoneme::PhonemeLabel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemResult {
    pub system: System,
    pub confusion: ConfusionMatrix,
    pub recall: RecognitionReport,
    /// Tree file contents for hierarchical systems.
    pub hierarchy: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

/// One phoneme of the side-by-side table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: PhonemeLabel,
    /// Measured recall per system, in report order.
    pub measured: Vec<Option<f64>>,
    /// Published rates for the hierarchical systems present, in report order.
    pub reference: Vec<Option<u8>>,
}

fn reference_systems(r: &ExperimentReport) -> Vec<System> {
    r.systems
        .iter()
        .map(|s| s.system)
        .filter(|s| matches!(s, System::HsTc | System::HsCo))
        .collect()
}

impl ExperimentReport {
    pub fn table_header(&self) -> Vec<String> {
        let mut header = vec!["Phoneme".to_string()];
        header.extend(self.systems.iter().map(|s| s.system.name().to_string()));
        header.extend(reference_systems(self).iter().map(|s| format!("paper {}", s.name())));
        header
    }

    /// Every label with test tokens, once, in symbol order.
    pub fn table_rows(&self) -> Vec<TableRow> {
        let Some(first) = self.systems.first() else {
            return Vec::new();
        };
        let refs = reference_systems(self);
        first
            .recall
            .rows
            .iter()
            .filter(|row| row.tokens > 0)
            .map(|row| TableRow {
                label: row.label,
                measured: self.systems.iter().map(|s| s.recall.recall(row.label)).collect(),
                reference: refs
                    .iter()
                    .map(|s| {
                        reference_rate(row.label).map(|r| match s {
                            System::HsTc => r.hstc,
                            _ => r.hsco,
                        })
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn table_text(&self) -> String {
        let mut out = self.table_header().join(", ") + "\n";
        for row in self.table_rows() {
            let mut cells = vec![row.label.to_string()];
            cells.extend(
                row.measured
                    .iter()
                    .map(|m| m.map_or("-".to_string(), |v| format!("{:.1}%", v * 100.0))),
            );
            cells.extend(
                row.reference
                    .iter()
                    .map(|r| r.map_or("-".to_string(), |v| format!("{v}%"))),
            );
            out += &cells.join(", ");
            out.push('\n');
        }
        out
    }

    /// Same table; measured and published values as percentages without the sign.
    pub fn table_csv(&self) -> String {
        let mut out = self.table_header().join(",") + "\n";
        for row in self.table_rows() {
            let mut cells = vec![row.label.to_string()];
            cells.extend(
                row.measured
                    .iter()
                    .map(|m| m.map_or(String::new(), |v| format!("{:.2}", v * 100.0))),
            );
            cells.extend(row.reference.iter().map(|r| r.map_or(String::new(), |v| v.to_string())));
            out += &cells.join(",");
            out.push('\n');
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "train segments: {}", self.split.train);
        let _ = writeln!(out, "test segments: {}", self.split.test);
        let _ = writeln!(
            out,
            "split: fraction {} seed {}{}",
            self.config.split.train_fraction,
            self.config.split.seed,
            if self.config.split.speaker_disjoint {
                " speaker-disjoint"
            } else {
                ""
            }
        );
        let _ = writeln!(out, "test set sha256: {}", self.test_set_hash);
        for s in &self.systems {
            let acc = s
                .recall
                .overall
                .map_or("-".to_string(), |v| format!("{:.2}%", v * 100.0));
            let _ = writeln!(
                out,
                "{}: accuracy {} ({}/{})",
                s.system.name(),
                acc,
                s.recall.correct,
                s.recall.total
            );
        }
        out
    }
}

/// `label,tokens,correct,recall` for every row of the report.
pub fn recall_csv(r: &RecognitionReport) -> String {
    let mut out = String::from("label,tokens,correct,recall\n");
    for row in &r.rows {
        let recall = row.recall.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(out, "{},{},{},{}", row.label, row.tokens, row.correct, recall);
    }
    out
}

/// Inverse of [`recall_csv`].
pub fn parse_recall_csv(text: &str, system: &str) -> Result<RecognitionReport, ExperimentError> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, what: &str| ExperimentError::Config(format!("recall CSV line {line}: {what}"));
    match lines.next() {
        Some((_, "label,tokens,correct,recall")) => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let n = idx + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(n, "expected 4 fields"));
        }
        let label = PhonemeLabel::parse(f[0]).map_err(|e| bad(n, &e.to_string()))?;
        let tokens: u64 = f[1].parse().map_err(|_| bad(n, "bad token count"))?;
        let correct: u64 = f[2].parse().map_err(|_| bad(n, "bad correct count"))?;
        if correct > tokens {
            return Err(bad(n, "more correct than tokens"));
        }
        let recall = if f[3].is_empty() {
            None
        } else {
            Some(f[3].parse::<f64>().map_err(|_| bad(n, "bad recall"))?)
        };
        rows.push(RecallRow {
            label,
            tokens,
            correct,
            recall,
        });
    }
    let total = rows.iter().map(|r| r.tokens).sum();
    let correct = rows.iter().map(|r| r.correct).sum();
    Ok(RecognitionReport {
        system: system.to_string(),
        rows,
        total,
        correct,
        overall: (total > 0).then(|| correct as f64 / total as f64),
    })
}

fn write(path: PathBuf, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    fs::write(&path, contents).map_err(|source| ExperimentError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

/// Writes the side-by-side table (`table.txt` or `table.csv`), `summary.txt`,
/// `report.json`, per-system `recall-*.csv` and `confusion-*.csv`, the trees
/// used, and `timings.txt`. Everything except the timings is a deterministic
/// function of the config. Returns the paths written.
pub fn emit_report(r: &ExperimentReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    match format {
        ReportFormat::Text => write(dir.join("table.txt"), r.table_text().as_bytes(), &mut written)?,
        ReportFormat::Csv => write(dir.join("table.csv"), r.table_csv().as_bytes(), &mut written)?,
    }
    write(dir.join("summary.txt"), r.summary_text().as_bytes(), &mut written)?;
    write(dir.join("report.json"), r.to_json().as_bytes(), &mut written)?;
    for s in &r.systems {
        let slug = s.system.slug();
        write(
            dir.join(format!("recall-{slug}.csv")),
            recall_csv(&s.recall).as_bytes(),
            &mut written,
        )?;
        let mut buf = Vec::new();
        s.confusion.write_csv(&mut buf)?;
        write(dir.join(format!("confusion-{slug}.csv")), &buf, &mut written)?;
        if let Some(tree) = &s.hierarchy {
            write(dir.join(format!("{slug}.hierarchy")), tree.as_bytes(), &mut written)?;
        }
    }
    if let Some(d) = &r.derivation {
        let mut buf = Vec::new();
        d.matrix.write_csv(&mut buf)?;
        write(dir.join("confusion-source.csv"), &buf, &mut written)?;
    }
    let mut timings = String::new();
    for (stage, secs) in &r.timings {
        let _ = writeln!(timings, "{stage}\t{secs:.3}s");
    }
    write(dir.join("timings.txt"), timings.as_bytes(), &mut written)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confusion::per_class_recall;
    use crate::corpus::{CorpusSource, SynthSpec};
    use crate::experiment::{ExperimentConfig, SplitSummary};
    use crate::phoneme::label;

    fn report(systems: &[System], pairs: &[(&str, &str)]) -> ExperimentReport {
        let cm = ConfusionMatrix::accumulate_canonical(pairs.iter().map(|(a, b)| (label(a), label(b)))).unwrap();
        let spec = SynthSpec::uniform(&[label("aa")], 1);
        ExperimentReport {
            config: ExperimentConfig::new(CorpusSource::Synthetic { spec, seed: 0 }),
            split: SplitSummary {
                train: 0,
                test: pairs.len(),
                per_label: Vec::new(),
            },
            test_set_hash: String::new(),
            systems: systems
                .iter()
                .map(|&system| SystemResult {
                    system,
                    recall: per_class_recall(&cm, system.name()),
                    confusion: cm.clone(),
                    hierarchy: None,
                })
                .collect(),
            derivation: None,
            timings: vec![("train".into(), 1.0)],
        }
    }

    #[test]
    fn header_and_reference_rows() {
        let r = report(
            &[System::HsTc, System::HsCo],
            &[("iy", "iy"), ("aa", "ah"), ("aa", "aa")],
        );
        let text = r.table_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Phoneme, HS-TC, HS-CO, paper HS-TC, paper HS-CO");
        assert_eq!(lines[1], "aa, 50.0%, 50.0%, 54%, 59%");
        assert_eq!(lines[2], "iy, 100.0%, 100.0%, 74%, 66%");
        assert_eq!(lines.len(), 3);
        let csv = r.table_csv();
        assert!(csv.starts_with("Phoneme,HS-TC,HS-CO,paper HS-TC,paper HS-CO\naa,50.00,50.00,54,59\n"));
        let flat = report(&[System::Flat], &[("pau", "pau")]);
        assert_eq!(flat.table_text(), "Phoneme, Flat\npau, 100.0%\n");
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = report(&[System::HsTc, System::HsCo], &[]);
        assert_eq!(r.table_text(), "Phoneme, HS-TC, HS-CO, paper HS-TC, paper HS-CO\n");
        let dir = tempfile::tempdir().unwrap();
        emit_report(&r, dir.path(), ReportFormat::Csv).unwrap();
        let csv = fs::read_to_string(dir.path().join("table.csv")).unwrap();
        assert_eq!(csv, "Phoneme,HS-TC,HS-CO,paper HS-TC,paper HS-CO\n");
    }

    #[test]
    fn recall_csv_round_trip() {
        let r = report(
            &[System::Flat],
            &[
                ("iy", "iy"),
                ("aa", "ah"),
                ("aa", "aa"),
                ("s", "z"),
                ("s", "s"),
                ("s", "s"),
            ],
        );
        let rec = &r.systems[0].recall;
        let back = parse_recall_csv(&recall_csv(rec), rec.system.as_str()).unwrap();
        assert_eq!(&back, rec);
        assert!(parse_recall_csv("nope\n", "x").is_err());
        assert!(parse_recall_csv("label,tokens,correct,recall\naa,1,2,\n", "x").is_err());
    }

    #[test]
    fn emitted_files() {
        let r = report(&[System::Flat, System::HsTc], &[("iy", "iy")]);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&r, dir.path(), ReportFormat::Text).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        for expected in [
            "table.txt",
            "summary.txt",
            "report.json",
            "recall-flat.csv",
            "confusion-hs-tc.csv",
            "timings.txt",
        ] {
            assert!(names.iter().any(|n| n == expected), "{expected}");
        }
        let json = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(!json.contains("timings"));
        let cm =
            ConfusionMatrix::read_csv(fs::read(dir.path().join("confusion-flat.csv")).unwrap().as_slice()).unwrap();
        assert_eq!(cm, r.systems[0].confusion);
    }
}
