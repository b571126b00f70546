use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::corpus::Corpus;
use crate::phoneme::PhonemeLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    /// Assign whole speakers to one side instead of stratifying by label.
    pub speaker_disjoint: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 42,
            speaker_disjoint: false,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(ExperimentError::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Number of training items out of `n`: the rounded fraction, keeping at
/// least one item on each side when `n >= 2`.
fn train_count(n: usize, fraction: f64) -> usize {
    if n < 2 {
        return n;
    }
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Train and test index lists, each ascending.
///
/// Stratified mode splits every label separately; a label with a single
/// item goes to train with a warning. Speaker-disjoint mode splits the sorted
/// speaker list instead.
pub fn split_indices(
    labels: &[PhonemeLabel],
    speakers: &[&str],
    cfg: &SplitConfig,
) -> Result<(Vec<usize>, Vec<usize>), ExperimentError> {
    cfg.validate()?;
    if labels.is_empty() {
        return Err(ExperimentError::Config("cannot split an empty corpus".into()));
    }
    if labels.len() != speakers.len() {
        return Err(ExperimentError::Config(
            "label and speaker lists differ in length".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if cfg.speaker_disjoint {
        let mut ids: Vec<&str> = speakers.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        if ids.len() < 2 {
            log::warn!("speaker-disjoint split with a single speaker: everything goes to train");
        }
        ids.shuffle(&mut rng);
        let cut = train_count(ids.len(), cfg.train_fraction);
        let train_speakers: BTreeSet<&str> = ids[..cut].iter().copied().collect();
        for (i, s) in speakers.iter().enumerate() {
            if train_speakers.contains(s) {
                train.push(i);
            } else {
                test.push(i);
            }
        }
    } else {
        let mut by_label: BTreeMap<PhonemeLabel, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(i);
        }
        for (l, mut idx) in by_label {
            if idx.len() == 1 {
                log::warn!("label {l} has a single segment; it goes to the training side");
            }
            idx.shuffle(&mut rng);
            let cut = train_count(idx.len(), cfg.train_fraction);
            train.extend_from_slice(&idx[..cut]);
            test.extend_from_slice(&idx[cut..]);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_corpus(c: &Corpus, cfg: &SplitConfig) -> Result<(Corpus, Corpus), ExperimentError> {
    let labels: Vec<PhonemeLabel> = c.segments.iter().map(|s| s.label).collect();
    let speakers: Vec<&str> = c.segments.iter().map(|s| s.speaker_id.as_str()).collect();
    let (train, test) = split_indices(&labels, &speakers, cfg)?;
    let pick = |idx: &[usize]| Corpus {
        segments: idx.iter().map(|&i| c.segments[i].clone()).collect(),
        dialect: c.dialect.clone(),
    };
    Ok((pick(&train), pick(&test)))
}

/// Stratified fold assignment: each label's items are shuffled and dealt
/// round-robin to `folds` folds.
pub fn fold_assignment(labels: &[PhonemeLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_label: BTreeMap<PhonemeLabel, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut fold = vec![0; labels.len()];
    for (_, mut idx) in by_label {
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold[i] = k % folds;
        }
    }
    fold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phoneme::label;

    fn data(per: &[(&str, usize)]) -> (Vec<PhonemeLabel>, Vec<String>) {
        let mut labels = Vec::new();
        let mut speakers = Vec::new();
        for (l, n) in per {
            for j in 0..*n {
                labels.push(label(l));
                speakers.push(format!("spk{}", j % 7));
            }
        }
        (labels, speakers)
    }

    #[test]
    fn stratified_counts() {
        let (labels, speakers) = data(&[("aa", 100), ("iy", 100), ("s", 1), ("z", 2)]);
        let spk: Vec<&str> = speakers.iter().map(String::as_str).collect();
        let (train, test) = split_indices(&labels, &spk, &SplitConfig::default()).unwrap();
        let count = |idx: &[usize], l: &str| idx.iter().filter(|&&i| labels[i] == label(l)).count();
        assert_eq!((count(&train, "aa"), count(&test, "aa")), (80, 20));
        assert_eq!((count(&train, "iy"), count(&test, "iy")), (80, 20));
        assert_eq!((count(&train, "s"), count(&test, "s")), (1, 0));
        assert_eq!((count(&train, "z"), count(&test, "z")), (1, 1));
        let again = split_indices(&labels, &spk, &SplitConfig::default()).unwrap();
        assert_eq!(again, (train.clone(), test.clone()));
        let other = SplitConfig {
            seed: 7,
            ..SplitConfig::default()
        };
        assert_ne!(split_indices(&labels, &spk, &other).unwrap().0, train);
    }

    #[test]
    fn speaker_disjoint() {
        let (labels, speakers) = data(&[("aa", 50), ("iy", 50)]);
        let spk: Vec<&str> = speakers.iter().map(String::as_str).collect();
        let cfg = SplitConfig {
            speaker_disjoint: true,
            ..SplitConfig::default()
        };
        let (train, test) = split_indices(&labels, &spk, &cfg).unwrap();
        assert_eq!(train.len() + test.len(), labels.len());
        let a: BTreeSet<&str> = train.iter().map(|&i| spk[i]).collect();
        let b: BTreeSet<&str> = test.iter().map(|&i| spk[i]).collect();
        assert!(a.is_disjoint(&b));
        assert_eq!((a.len(), b.len()), (6, 1));
    }

    #[test]
    fn invalid() {
        let bad = SplitConfig {
            train_fraction: 1.0,
            ..SplitConfig::default()
        };
        assert!(split_indices(&[label("aa")], &["s"], &bad).is_err());
        assert!(split_indices(&[], &[], &SplitConfig::default()).is_err());
    }

    #[test]
    fn folds_are_stratified() {
        let (labels, _) = data(&[("aa", 9), ("iy", 10)]);
        let folds = fold_assignment(&labels, 3, 1);
        for f in 0..3 {
            let n = (0..labels.len())
                .filter(|&i| folds[i] == f && labels[i] == label("aa"))
                .count();
            assert_eq!(n, 3);
        }
    }
}
