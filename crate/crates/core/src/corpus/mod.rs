//! Labelled phoneme segments: TIMIT-style corpus loading and a synthetic generator.

mod phn;
mod sphere;
mod synth;
mod timit;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phoneme::PhonemeLabel;

pub use phn::{emit_phn, parse_phn, PhnError, PhnErrorKind, PhnSpan};
pub use sphere::{emit_sphere, is_sphere, parse_header, parse_sphere, ByteOrder, SphereError, SphereHeader};
pub use synth::{synth_corpus, SynthClass, SynthSpec};
pub use timit::{load_corpus, read_audio, write_timit_layout, Partition};

/// Decoded mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

/// One labelled span of audio: the classification unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeSegment {
    pub label: PhonemeLabel,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub speaker_id: String,
    pub utterance_id: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub segments: Vec<PhonemeSegment>,
    pub dialect: String,
}

impl Corpus {
    pub fn new(dialect: impl Into<String>, segments: Vec<PhonemeSegment>) -> Result<Self, CorpusError> {
        for seg in &segments {
            if seg.samples.is_empty() || seg.sample_rate == 0 {
                return Err(CorpusError::InvalidSegment {
                    utterance: seg.utterance_id.clone(),
                    reason: "empty samples or zero sample rate".into(),
                });
            }
        }
        Ok(Corpus {
            segments,
            dialect: dialect.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn label_counts(&self) -> BTreeMap<PhonemeLabel, usize> {
        let mut counts = BTreeMap::new();
        for seg in &self.segments {
            *counts.entry(seg.label).or_insert(0) += 1;
        }
        counts
    }
}

/// Where a corpus comes from. Used by experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorpusSource {
    Timit {
        root: PathBuf,
        dialect: String,
        #[serde(default)]
        partition: Partition,
    },
    Synthetic {
        spec: SynthSpec,
        seed: u64,
    },
}

impl CorpusSource {
    pub fn load(&self) -> Result<Corpus, CorpusError> {
        match self {
            CorpusSource::Timit {
                root,
                dialect,
                partition,
            } => load_corpus(root, dialect, *partition),
            CorpusSource::Synthetic { spec, seed } => synth_corpus(spec, *seed),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Sphere {
        path: PathBuf,
        #[source]
        source: SphereError,
    },
    #[error("{path}: {reason}")]
    Wav { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Phn {
        path: PathBuf,
        #[source]
        source: PhnError,
    },
    #[error("utterance {utterance}: missing companion {missing} file")]
    MissingCompanion { utterance: String, missing: &'static str },
    #[error("{path}: span {start}..{end} exceeds audio length {len}")]
    SpanOutOfRange {
        path: PathBuf,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("segment in {utterance}: {reason}")]
    InvalidSegment { utterance: String, reason: String },
    #[error("synthetic spec: {0}")]
    Synth(String),
}
