//! `.PHN` time-aligned phonetic transcriptions: one `<start> <end> <label>` line per span.

use std::fmt::Write as _;

use thiserror::Error;

use crate::phoneme::PhonemeLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhnSpan {
    /// First sample index (inclusive).
    pub start: usize,
    /// End sample index (exclusive).
    pub end: usize,
    pub label: PhonemeLabel,
}

impl PhnSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn duration_secs(&self, sample_rate: u32) -> f64 {
        self.len() as f64 / f64::from(sample_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct PhnError {
    pub line: usize,
    pub kind: PhnErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhnErrorKind {
    #[error("expected `<start> <end> <label>`, got {0:?}")]
    Malformed(String),
    #[error("sample index {0:?} is not a non-negative integer")]
    BadIndex(String),
    #[error("end {end} is not after start {start}")]
    EmptySpan { start: usize, end: usize },
    #[error("span starting at {start} overlaps previous span ending at {previous_end}")]
    Overlap { start: usize, previous_end: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

pub fn parse_phn(text: &str) -> Result<Vec<PhnSpan>, PhnError> {
    let mut spans: Vec<PhnSpan> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |kind| PhnError { line, kind };
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [start, end, symbol] = fields[..] else {
            return Err(err(PhnErrorKind::Malformed(trimmed.to_string())));
        };
        let parse_index = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(PhnErrorKind::BadIndex(s.to_string())))
        };
        let start = parse_index(start)?;
        let end = parse_index(end)?;
        if end <= start {
            return Err(err(PhnErrorKind::EmptySpan { start, end }));
        }
        if let Some(prev) = spans.last() {
            if start < prev.end {
                return Err(err(PhnErrorKind::Overlap {
                    start,
                    previous_end: prev.end,
                }));
            }
        }
        let label = PhonemeLabel::parse(symbol).map_err(|_| err(PhnErrorKind::UnknownLabel(symbol.to_string())))?;
        spans.push(PhnSpan { start, end, label });
    }
    Ok(spans)
}

pub fn emit_phn(spans: &[PhnSpan]) -> String {
    let mut out = String::new();
    for s in spans {
        let _ = writeln!(out, "{} {} {}", s.start, s.end, s.label);
    }
    out
}
