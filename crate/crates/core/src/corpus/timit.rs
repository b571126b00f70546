//! TIMIT directory layout: `<root>/{TRAIN,TEST}/<DRn>/<speaker>/<utterance>.{WAV,PHN}`.
//!
//! Directory and extension matching is case-insensitive so both the original
//! upper-case distribution and lower-cased copies load.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sphere::{self, ByteOrder};
use super::{emit_phn, parse_phn, Audio, Corpus, CorpusError, PhnSpan, PhonemeSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Partition {
    Train,
    Test,
    #[default]
    Both,
}

impl Partition {
    fn dirs(self) -> &'static [&'static str] {
        match self {
            Partition::Train => &["train"],
            Partition::Test => &["test"],
            Partition::Both => &["train", "test"],
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Child entries of `dir` sorted by name, optionally filtered to directories.
fn sorted_entries(dir: &Path, dirs_only: bool) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        if !dirs_only || path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name_lower(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default()
}

fn find_child_dir(parent: &Path, name: &str) -> Result<Option<PathBuf>, CorpusError> {
    if !parent.is_dir() {
        return Ok(None);
    }
    Ok(sorted_entries(parent, true)?
        .into_iter()
        .find(|p| file_name_lower(p) == name.to_ascii_lowercase()))
}

fn extension_lower(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

struct Utterance {
    id: String,
    speaker: String,
    wav: PathBuf,
    phn: PathBuf,
}

/// Decodes SPHERE audio, falling back to RIFF/WAVE 16-bit mono PCM.
pub fn read_audio(path: &Path) -> Result<Audio, CorpusError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if sphere::is_sphere(&bytes) {
        return sphere::parse_sphere(&bytes).map_err(|source| CorpusError::Sphere {
            path: path.to_path_buf(),
            source,
        });
    }
    let wav_err = |reason: String| CorpusError::Wav {
        path: path.to_path_buf(),
        reason,
    };
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| wav_err(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(wav_err(format!(
            "only 16-bit mono PCM is supported (got {} ch, {} bits)",
            spec.channels, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| wav_err(e.to_string()))?;
    Ok(Audio {
        sample_rate: spec.sample_rate,
        samples,
    })
}

fn collect_utterances(root: &Path, dialect: &str, partition: Partition) -> Result<Vec<Utterance>, CorpusError> {
    let mut utterances = Vec::new();
    for part in partition.dirs() {
        let Some(part_dir) = find_child_dir(root, part)? else {
            continue;
        };
        let Some(dialect_dir) = find_child_dir(&part_dir, dialect)? else {
            continue;
        };
        for speaker_dir in sorted_entries(&dialect_dir, true)? {
            let speaker = file_name_lower(&speaker_dir);
            let files = sorted_entries(&speaker_dir, false)?;
            let stem_of = |p: &Path| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().to_ascii_lowercase())
                    .unwrap_or_default()
            };
            let with_ext = |ext: &str| {
                files
                    .iter()
                    .filter(|p| extension_lower(p).as_deref() == Some(ext))
                    .map(|p| (stem_of(p), p.clone()))
                    .collect::<Vec<_>>()
            };
            let wavs = with_ext("wav");
            let phns = with_ext("phn");
            for (stem, wav) in &wavs {
                let id = format!("{part}/{}/{speaker}/{stem}", dialect.to_ascii_lowercase());
                let phn = phns
                    .iter()
                    .find(|(s, _)| s == stem)
                    .map(|(_, p)| p.clone())
                    .ok_or_else(|| CorpusError::MissingCompanion {
                        utterance: id.clone(),
                        missing: "PHN",
                    })?;
                utterances.push(Utterance {
                    id,
                    speaker: speaker.clone(),
                    wav: wav.clone(),
                    phn,
                });
            }
            if let Some((stem, _)) = phns.iter().find(|(s, _)| !wavs.iter().any(|(w, _)| w == s)) {
                return Err(CorpusError::MissingCompanion {
                    utterance: format!("{part}/{}/{speaker}/{stem}", dialect.to_ascii_lowercase()),
                    missing: "WAV",
                });
            }
        }
    }
    Ok(utterances)
}

fn load_utterance(utt: &Utterance) -> Result<Vec<PhonemeSegment>, CorpusError> {
    let audio = read_audio(&utt.wav)?;
    let text = fs::read_to_string(&utt.phn).map_err(io_err(&utt.phn))?;
    let spans = parse_phn(&text).map_err(|source| CorpusError::Phn {
        path: utt.phn.clone(),
        source,
    })?;
    spans
        .into_iter()
        .map(|span| {
            if span.end > audio.samples.len() {
                return Err(CorpusError::SpanOutOfRange {
                    path: utt.phn.clone(),
                    start: span.start,
                    end: span.end,
                    len: audio.samples.len(),
                });
            }
            Ok(PhonemeSegment {
                label: span.label,
                samples: audio.samples[span.start..span.end].to_vec(),
                sample_rate: audio.sample_rate,
                speaker_id: utt.speaker.clone(),
                utterance_id: utt.id.clone(),
            })
        })
        .collect()
}

/// Loads every phoneme segment of one dialect region.
///
/// Utterances are decoded in parallel; segment order follows the sorted
/// directory walk so results do not depend on scheduling.
pub fn load_corpus(root: &Path, dialect: &str, partition: Partition) -> Result<Corpus, CorpusError> {
    let utterances = collect_utterances(root, dialect, partition)?;
    if utterances.is_empty() {
        log::warn!(
            "no utterances for dialect {dialect:?} under {} ({partition:?})",
            root.display()
        );
    }
    let per_utt: Vec<Vec<PhonemeSegment>> = utterances.par_iter().map(load_utterance).collect::<Result<_, _>>()?;
    Corpus::new(dialect.to_ascii_lowercase(), per_utt.into_iter().flatten().collect())
}

/// Writes a corpus as a TIMIT-style tree, one utterance per segment, under
/// `<root>/TRAIN/<DIALECT>/<SPEAKER>/`. Samples are quantized to 16 bits.
pub fn write_timit_layout(corpus: &Corpus, root: &Path, dialect: &str) -> Result<(), CorpusError> {
    let base = root.join("TRAIN").join(dialect.to_ascii_uppercase());
    let mut next_index: std::collections::BTreeMap<&str, usize> = Default::default();
    for seg in &corpus.segments {
        let speaker_dir = base.join(seg.speaker_id.to_ascii_uppercase());
        fs::create_dir_all(&speaker_dir).map_err(io_err(&speaker_dir))?;
        let n = next_index.entry(seg.speaker_id.as_str()).or_insert(0);
        let stem = format!("U{:05}", *n);
        *n += 1;
        let audio = Audio {
            sample_rate: seg.sample_rate,
            samples: seg.samples.clone(),
        };
        let wav = speaker_dir.join(format!("{stem}.WAV"));
        fs::write(&wav, sphere::emit_sphere(&audio, ByteOrder::Little)).map_err(io_err(&wav))?;
        let phn = speaker_dir.join(format!("{stem}.PHN"));
        let span = PhnSpan {
            start: 0,
            end: seg.samples.len(),
            label: seg.label,
        };
        fs::write(&phn, emit_phn(&[span])).map_err(io_err(&phn))?;
    }
    Ok(())
}
