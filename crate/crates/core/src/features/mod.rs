//! MFCC + delta + delta-delta segment features.
//!
//! Each phoneme segment becomes one vector of `3 * n_cepstra` components
//! (39 with the defaults): `[c1..c13, Δc1..Δc13, ΔΔc1..ΔΔc13]`, pooled over
//! the segment's frames.

mod delta;
mod mfcc;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, PhonemeSegment};
use crate::phoneme::PhonemeLabel;

pub use delta::deltas;
pub use mfcc::{dct_matrix, frame_geometry, frame_signal, hamming, hz_to_mel, mel_to_hz, MelFilterbank, MfccExtractor};

/// Feature dimension with the default configuration.
pub const FEATURE_DIM: usize = 39;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid MFCC configuration: {0}")]
    InvalidConfig(String),
    #[error("empty signal")]
    EmptySignal,
    #[error("feature CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How per-frame vectors are reduced to one segment vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    #[default]
    Mean,
    CenterFrame,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Mean => "mean",
            Pooling::CenterFrame => "center-frame",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccConfig {
    /// Seconds.
    pub frame_length: f64,
    /// Seconds.
    pub frame_shift: f64,
    pub pre_emphasis: f64,
    pub n_mel_filters: usize,
    /// Static coefficients kept, excluding order 0.
    pub n_cepstra: usize,
    /// Regression half-width in frames, used for both delta orders.
    pub delta_window: usize,
    pub log_floor: f64,
    pub pooling: Pooling,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            frame_length: 0.025,
            frame_shift: 0.010,
            pre_emphasis: 0.97,
            n_mel_filters: 26,
            n_cepstra: 13,
            delta_window: 2,
            log_floor: 1e-10,
            pooling: Pooling::Mean,
        }
    }
}

impl MfccConfig {
    // Negated comparisons so that NaN fails validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidConfig(m.to_string()));
        if !(self.frame_shift > 0.0 && self.frame_shift <= self.frame_length) {
            return bad("need 0 < frame_shift <= frame_length");
        }
        if self.n_cepstra < 1 {
            return bad("n_cepstra must be at least 1");
        }
        if self.n_mel_filters <= self.n_cepstra {
            return bad("n_mel_filters must exceed n_cepstra");
        }
        if self.delta_window < 1 {
            return bad("delta_window must be at least 1");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        3 * self.n_cepstra
    }

    /// One-line `key=value` echo used in dump and report headers.
    pub fn describe(&self) -> String {
        format!(
            "frame_length={} frame_shift={} pre_emphasis={} n_mel_filters={} n_cepstra={} delta_window={} log_floor={} window=hamming pooling={}",
            self.frame_length,
            self.frame_shift,
            self.pre_emphasis,
            self.n_mel_filters,
            self.n_cepstra,
            self.delta_window,
            self.log_floor,
            self.pooling
        )
    }
}

/// Pooled `[static; delta; delta-delta]` vector for one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-frame `[c; Δc; ΔΔc]` rows.
pub fn frame_features(samples: &[f64], extractor: &MfccExtractor) -> Result<Vec<Vec<f64>>, FeatureError> {
    let cfg = extractor.config();
    let frames = frame_signal(samples, extractor.sample_rate(), cfg)?;
    let statics: Vec<Vec<f64>> = frames.iter().map(|f| extractor.mfcc_frame(f)).collect();
    let d1 = deltas(&statics, cfg.delta_window);
    let d2 = deltas(&d1, cfg.delta_window);
    Ok(statics
        .into_iter()
        .zip(d1)
        .zip(d2)
        .map(|((mut s, a), b)| {
            s.extend(a);
            s.extend(b);
            s
        })
        .collect())
}

fn pool(rows: &[Vec<f64>], pooling: Pooling) -> Vec<f64> {
    match pooling {
        Pooling::Mean => {
            let mut acc = vec![0.0; rows[0].len()];
            for row in rows {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            let n = rows.len() as f64;
            acc.iter_mut().for_each(|a| *a /= n);
            acc
        }
        Pooling::CenterFrame => rows[rows.len() / 2].clone(),
    }
}

pub fn samples_features(samples: &[f64], extractor: &MfccExtractor) -> Result<FeatureVector, FeatureError> {
    let rows = frame_features(samples, extractor)?;
    Ok(FeatureVector(pool(&rows, extractor.config().pooling)))
}

pub fn segment_features(seg: &PhonemeSegment, cfg: &MfccConfig) -> Result<FeatureVector, FeatureError> {
    let extractor = MfccExtractor::new(cfg, seg.sample_rate)?;
    samples_features(&seg.samples, &extractor)
}

/// One labelled feature vector with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub utterance_id: String,
    pub speaker_id: String,
    pub label: PhonemeLabel,
    pub features: FeatureVector,
}

/// Extracts features for every segment of `corpus`, in corpus order.
pub fn extract_corpus(corpus: &Corpus, cfg: &MfccConfig) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut extractors: BTreeMap<u32, MfccExtractor> = BTreeMap::new();
    for seg in &corpus.segments {
        if let Entry::Vacant(slot) = extractors.entry(seg.sample_rate) {
            slot.insert(MfccExtractor::new(cfg, seg.sample_rate)?);
        }
    }
    corpus
        .segments
        .par_iter()
        .map(|seg| {
            let features = samples_features(&seg.samples, &extractors[&seg.sample_rate])?;
            Ok(FeatureRow {
                utterance_id: seg.utterance_id.clone(),
                speaker_id: seg.speaker_id.clone(),
                label: seg.label,
                features,
            })
        })
        .collect()
}

/// Writes `# mfcc <config>` then `utterance_id,label,f0..` and one row per segment.
pub fn write_feature_csv<W: Write>(mut out: W, cfg: &MfccConfig, rows: &[FeatureRow]) -> Result<(), FeatureError> {
    writeln!(out, "# mfcc {}", cfg.describe())?;
    let dim = rows.first().map_or(cfg.dim(), |r| r.features.len());
    let mut header = String::from("utterance_id,label");
    for i in 0..dim {
        header.push_str(&format!(",f{i}"));
    }
    writeln!(out, "{header}")?;
    for row in rows {
        write!(out, "{},{}", row.utterance_id, row.label)?;
        for v in row.features.as_slice() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a dump produced by [`write_feature_csv`]. Speaker ids are not part of
/// the format and are left empty.
pub fn read_feature_csv<R: BufRead>(input: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let n = idx + 1;
        let err = |reason: String| FeatureError::Csv { line: n, reason };
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if !line.starts_with("utterance_id,label") {
                return Err(err("missing header row".into()));
            }
            saw_header = true;
            continue;
        }
        let mut fields = line.split(',');
        let utterance_id = fields.next().unwrap_or_default().to_string();
        let label_text = fields.next().ok_or_else(|| err("missing label".into()))?;
        let label = PhonemeLabel::parse(label_text).map_err(|e| err(e.to_string()))?;
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad number {f:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            let first: &FeatureRow = first;
            if first.features.len() != values.len() {
                return Err(err(format!(
                    "expected {} components, got {}",
                    first.features.len(),
                    values.len()
                )));
            }
        }
        rows.push(FeatureRow {
            utterance_id,
            speaker_id: String::new(),
            label,
            features: FeatureVector(values),
        });
    }
    Ok(rows)
}
