//! License-free synthetic corpora.
//!
//! Every class is a sum of two sinusoids at class-specific frequencies, drawn
//! with random phases and buried in white Gaussian noise. Classes listed in a
//! `confusable` group have their frequencies pulled toward the group's first
//! member by the `confusability` factor (0 keeps them disjoint, 1 makes them
//! identical).

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{sphere::quantize, Corpus, CorpusError, PhonemeSegment};
use crate::features::{hz_to_mel, mel_to_hz};
use crate::phoneme::PhonemeLabel;

const PARTIAL_AMPLITUDE: f64 = 0.25;
const LOWEST_HZ: f64 = 200.0;
const HIGHEST_HZ: f64 = 6000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClass {
    pub label: PhonemeLabel,
    pub count: usize,
}

/// Generator description. Deserializes from TOML:
///
/// ```toml
/// sample_rate = 16000
/// min_duration = 0.05     # seconds
/// max_duration = 0.12
/// noise = 0.1             # std-dev of additive white noise
/// speakers = 4            # segments are dealt round-robin to speakers
/// confusability = 0.8
/// confusable = [["aa", "ah", "ao"]]
///
/// [[classes]]
/// label = "aa"
/// count = 40
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    #[serde(default = "default_min_duration")]
    pub min_duration: f64,
    #[serde(default = "default_max_duration")]
    pub max_duration: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_speakers")]
    pub speakers: usize,
    #[serde(default)]
    pub confusability: f64,
    #[serde(default)]
    pub confusable: Vec<Vec<PhonemeLabel>>,
    pub classes: Vec<SynthClass>,
}

fn default_rate() -> u32 {
    16000
}
fn default_min_duration() -> f64 {
    0.05
}
fn default_max_duration() -> f64 {
    0.12
}
fn default_noise() -> f64 {
    0.1
}
fn default_speakers() -> usize {
    4
}

impl SynthSpec {
    /// `count` segments for each label, other fields at their defaults.
    pub fn uniform(labels: &[PhonemeLabel], count: usize) -> Self {
        SynthSpec {
            sample_rate: default_rate(),
            min_duration: default_min_duration(),
            max_duration: default_max_duration(),
            noise: default_noise(),
            speakers: default_speakers(),
            confusability: 0.0,
            confusable: Vec::new(),
            classes: labels.iter().map(|&label| SynthClass { label, count }).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::Synth(msg));
        if self.classes.is_empty() {
            return bad("no classes".into());
        }
        let mut seen = BTreeSet::new();
        for class in &self.classes {
            if class.count == 0 {
                return bad(format!("class {} requests zero segments", class.label));
            }
            if !seen.insert(class.label) {
                return bad(format!("duplicate class {}", class.label));
            }
        }
        for group in &self.confusable {
            if let Some(l) = group.iter().find(|l| !seen.contains(*l)) {
                return bad(format!("confusable label {l} is not a class"));
            }
        }
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if !(self.min_duration > 0.0 && self.min_duration <= self.max_duration) {
            return bad("need 0 < min_duration <= max_duration".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be finite and non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.confusability) {
            return bad("confusability must lie in [0, 1]".into());
        }
        if self.speakers == 0 {
            return bad("speakers must be at least 1".into());
        }
        Ok(())
    }

    /// Partial frequencies per class, in spec order.
    pub fn class_frequencies(&self) -> Vec<[f64; 2]> {
        let n = self.classes.len();
        let top = HIGHEST_HZ.min(0.45 * f64::from(self.sample_rate));
        let (lo, hi) = (hz_to_mel(LOWEST_HZ), hz_to_mel(top));
        let grid: Vec<f64> = (0..2 * n)
            .map(|k| lo + (hi - lo) * k as f64 / (2 * n - 1).max(1) as f64)
            .collect();
        let mut mels: Vec<[f64; 2]> = (0..n).map(|i| [grid[i], grid[i + n]]).collect();
        let index_of = |l: PhonemeLabel| self.classes.iter().position(|c| c.label == l);
        for group in &self.confusable {
            let Some(anchor) = group.first().and_then(|&l| index_of(l)) else {
                continue;
            };
            let shared = mels[anchor];
            for &member in &group[1..] {
                if let Some(i) = index_of(member) {
                    for (m, s) in mels[i].iter_mut().zip(shared) {
                        *m = (1.0 - self.confusability) * *m + self.confusability * s;
                    }
                }
            }
        }
        mels.into_iter().map(|[a, b]| [mel_to_hz(a), mel_to_hz(b)]).collect()
    }
}

/// Generates the corpus described by `spec`. Pure in `(spec, seed)`.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let freqs = spec.class_frequencies();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = f64::from(spec.sample_rate);
    let mut segments = Vec::new();
    for (class, partials) in spec.classes.iter().zip(&freqs) {
        for j in 0..class.count {
            let duration = if spec.max_duration > spec.min_duration {
                rng.random_range(spec.min_duration..spec.max_duration)
            } else {
                spec.min_duration
            };
            let len = ((duration * rate).round() as usize).max(1);
            let phases: Vec<f64> = partials.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            let samples = (0..len)
                .map(|t| {
                    let time = t as f64 / rate;
                    let tone: f64 = partials
                        .iter()
                        .zip(&phases)
                        .map(|(f, ph)| PARTIAL_AMPLITUDE * (2.0 * PI * f * time + ph).sin())
                        .sum();
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    f64::from(quantize(tone + spec.noise * noise)) / 32768.0
                })
                .collect();
            let speaker = format!("spk{}", j % spec.speakers);
            segments.push(PhonemeSegment {
                label: class.label,
                samples,
                sample_rate: spec.sample_rate,
                utterance_id: format!("synth/{speaker}/{}-{j}", class.label),
                speaker_id: speaker,
            });
        }
    }
    Corpus::new("synth", segments)
}
