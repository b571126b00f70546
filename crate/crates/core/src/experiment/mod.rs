//! End-to-end experiments: corpus → features → split → train → evaluate → report.

mod reference;
mod report;
mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::confusion::{
    major_confusions, per_class_recall, table_confusion_matrix, ConfusionError, ConfusionMatrix, RecognitionReport,
};
use crate::corpus::{CorpusError, CorpusSource};
use crate::features::{extract_corpus, FeatureError, FeatureRow, MfccConfig};
use crate::hierarchy::{
    build_hsco, build_hstc, load_trained, save_trained, train_hierarchy, Hierarchy, HierarchyError,
    HierarchyTrainConfig, HscoParams, TrainedHierarchy,
};
use crate::phoneme::PhonemeLabel;
use crate::svm::{load_model, save_model, train_multiclass, MulticlassModel, SvmConfig, SvmError};

pub use reference::{reference_labels, reference_rate, ReferenceRate};
pub use report::{emit_report, parse_recall_csv, recall_csv, ReportFormat, SystemResult, TableRow};
pub use split::{fold_assignment, split_corpus, split_indices, SplitConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("loading corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("extracting features: {0}")]
    Features(#[from] FeatureError),
    #[error("training: {0}")]
    Svm(#[from] SvmError),
    #[error("hierarchy: {0}")]
    Hierarchy(#[from] HierarchyError),
    #[error("confusion analysis: {0}")]
    Confusion(#[from] ConfusionError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Recognition systems an experiment can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    /// One multiclass SVM over all labels.
    Flat,
    /// The fixed articulatory hierarchy (or a custom fixed tree).
    HsTc,
    /// The hierarchy derived from confusions of the fixed one.
    HsCo,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Flat => "Flat",
            System::HsTc => "HS-TC",
            System::HsCo => "HS-CO",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            System::Flat => "flat",
            System::HsTc => "hs-tc",
            System::HsCo => "hs-co",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Confusion matrix that seeds the HS-CO derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConfusionSource {
    /// Held-out predictions of the fixed hierarchy over `folds` folds of the training set.
    CrossFold {
        folds: usize,
    },
    /// The embedded classifier-confusion table.
    Table,
    /// A confusion-matrix CSV.
    File {
        path: PathBuf,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HscoConfig {
    pub tau: f64,
    pub semivowels_in_vowel_branch: bool,
    pub max_cluster_size: Option<usize>,
    /// Major-confusion listing: at most `k` per label...
    pub k: usize,
    /// ...each holding at least this fraction of the label's tokens.
    pub min_fraction: f64,
    pub confusion_source: ConfusionSource,
}

impl Default for HscoConfig {
    fn default() -> Self {
        let p = HscoParams::default();
        HscoConfig {
            tau: p.tau,
            semivowels_in_vowel_branch: p.semivowels_in_vowel_branch,
            max_cluster_size: p.max_cluster_size,
            k: 6,
            min_fraction: 0.05,
            confusion_source: ConfusionSource::CrossFold { folds: 3 },
        }
    }
}

impl HscoConfig {
    pub fn params(&self) -> HscoParams {
        HscoParams {
            tau: self.tau,
            semivowels_in_vowel_branch: self.semivowels_in_vowel_branch,
            max_cluster_size: self.max_cluster_size,
        }
    }
}

fn default_systems() -> Vec<System> {
    vec![System::HsTc, System::HsCo]
}

fn default_min_samples() -> usize {
    1
}

/// Experiment description, usually read from TOML:
///
/// ```toml
/// systems = ["flat", "hs-tc", "hs-co"]
///
/// [source]
/// kind = "timit"
/// root = "/data/timit"
/// dialect = "dr1"
///
/// [split]
/// train_fraction = 0.8
/// seed = 42
///
/// [hsco]
/// tau = 0.1
/// confusion_source = { kind = "cross-fold", folds = 3 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: CorpusSource,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub mfcc: MfccConfig,
    #[serde(default)]
    pub svm: SvmConfig,
    /// Per-node SVM settings keyed by hierarchy node name.
    #[serde(default)]
    pub node_overrides: BTreeMap<String, SvmConfig>,
    #[serde(default = "default_min_samples")]
    pub min_samples: usize,
    #[serde(default = "default_systems")]
    pub systems: Vec<System>,
    #[serde(default)]
    pub hsco: HscoConfig,
    /// Hierarchy file replacing the built-in articulatory tree for HS-TC.
    #[serde(default)]
    pub traditional_tree: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(source: CorpusSource) -> Self {
        ExperimentConfig {
            source,
            split: SplitConfig::default(),
            mfcc: MfccConfig::default(),
            svm: SvmConfig::default(),
            node_overrides: BTreeMap::new(),
            min_samples: default_min_samples(),
            systems: default_systems(),
            hsco: HscoConfig::default(),
            traditional_tree: None,
            out_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, ExperimentError> {
        toml::to_string(self).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Reads a TOML config; relative paths inside it resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let CorpusSource::Timit { root, .. } = &mut cfg.source {
            resolve(root);
        }
        if let Some(p) = &mut cfg.traditional_tree {
            resolve(p);
        }
        if let ConfusionSource::File { path } = &mut cfg.hsco.confusion_source {
            resolve(path);
        }
        if let Some(p) = &mut cfg.out_dir {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Reseeds the split and, for synthetic corpora, the generator.
    pub fn reseed(&mut self, seed: u64) {
        self.split.seed = seed;
        if let CorpusSource::Synthetic { seed: s, .. } = &mut self.source {
            *s = seed;
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.split.validate()?;
        self.mfcc.validate()?;
        self.svm.validate()?;
        for c in self.node_overrides.values() {
            c.validate()?;
        }
        if self.systems.is_empty() {
            return Err(ExperimentError::Config("select at least one system".into()));
        }
        let mut seen = self.systems.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.systems.len() {
            return Err(ExperimentError::Config("systems are listed more than once".into()));
        }
        let h = &self.hsco;
        if !(h.tau > 0.0 && h.tau < 1.0) {
            return Err(ExperimentError::Config(format!(
                "hsco.tau must lie in (0, 1), got {}",
                h.tau
            )));
        }
        if h.k == 0 || !(0.0..1.0).contains(&h.min_fraction) {
            return Err(ExperimentError::Config(
                "hsco.k must be ≥ 1 and hsco.min_fraction in [0, 1)".into(),
            ));
        }
        if h.max_cluster_size == Some(0) {
            return Err(ExperimentError::Config("hsco.max_cluster_size must be positive".into()));
        }
        match h.confusion_source {
            ConfusionSource::CrossFold { folds } if folds < 2 => {
                return Err(ExperimentError::Config(
                    "cross-fold confusion source needs at least 2 folds".into(),
                ))
            }
            ConfusionSource::None if self.systems.contains(&System::HsCo) => {
                return Err(ExperimentError::Config("hs-co requires a confusion source".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn train_config(&self) -> HierarchyTrainConfig {
        HierarchyTrainConfig {
            svm: self.svm.clone(),
            node_overrides: self.node_overrides.clone(),
            min_samples: self.min_samples,
        }
    }

    pub fn traditional_hierarchy(&self) -> Result<Hierarchy, ExperimentError> {
        match &self.traditional_tree {
            None => Ok(build_hstc()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(Hierarchy::parse(&text)?)
            }
        }
    }
}

/// A trained system of any kind.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum TrainedSystem {
    Flat(MulticlassModel<PhonemeLabel>),
    Tree(TrainedHierarchy),
}

impl TrainedSystem {
    pub fn predict_batch<X: AsRef<[f64]> + Sync>(&self, xs: &[X]) -> Result<Vec<PhonemeLabel>, ExperimentError> {
        match self {
            TrainedSystem::Flat(m) => Ok(xs.par_iter().map(|x| m.predict(x.as_ref())).collect::<Result<_, _>>()?),
            TrainedSystem::Tree(t) => Ok(t.predict_batch(xs)?),
        }
    }

    /// Flat models go to `dir/model.json`; trees to a manifest directory.
    pub fn save(&self, dir: &Path) -> Result<(), ExperimentError> {
        let io = |source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        match self {
            TrainedSystem::Flat(m) => save_model(&dir.join(FLAT_MODEL_FILE), m)?,
            TrainedSystem::Tree(t) => save_trained(t, dir)?,
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, ExperimentError> {
        let flat = dir.join(FLAT_MODEL_FILE);
        if flat.exists() {
            Ok(TrainedSystem::Flat(load_model(&flat)?))
        } else {
            Ok(TrainedSystem::Tree(load_trained(dir)?))
        }
    }
}

const FLAT_MODEL_FILE: &str = "model.json";

/// How the HS-CO tree was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derivation {
    pub source: ConfusionSource,
    pub matrix: ConfusionMatrix,
    pub major_confusions: BTreeMap<PhonemeLabel, Vec<PhonemeLabel>>,
    pub hierarchy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSummary {
    pub train: usize,
    pub test: usize,
    /// `(label, train count, test count)` in label order.
    pub per_label: Vec<(PhonemeLabel, usize, usize)>,
}

/// Everything an experiment measured. Timings are kept apart from the
/// serialized report so reruns compare byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub split: SplitSummary,
    /// SHA-256 over the test rows (ids, labels, feature bits); every system is scored on it.
    pub test_set_hash: String,
    pub systems: Vec<SystemResult>,
    pub derivation: Option<Derivation>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl ExperimentReport {
    /// The report as pretty JSON, without timings.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn system(&self, s: System) -> Option<&SystemResult> {
        self.systems.iter().find(|r| r.system == s)
    }
}

pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub models: Vec<(System, TrainedSystem)>,
}

pub fn hash_rows(rows: &[&FeatureRow]) -> String {
    let mut h = Sha256::new();
    for r in rows {
        h.update(r.utterance_id.as_bytes());
        h.update([0]);
        h.update(r.label.as_str().as_bytes());
        h.update([0]);
        for v in &r.features.0 {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Confusions of `h` on held-out folds of the given rows.
pub fn cross_fold_confusions(
    h: &Hierarchy,
    rows: &[&FeatureRow],
    folds: usize,
    seed: u64,
    cfg: &HierarchyTrainConfig,
) -> Result<ConfusionMatrix, ExperimentError> {
    if folds < 2 {
        return Err(ExperimentError::Config(
            "cross-fold confusions need at least 2 folds".into(),
        ));
    }
    let labels: Vec<PhonemeLabel> = rows.iter().map(|r| r.label).collect();
    let fold = fold_assignment(&labels, folds, seed);
    let mut cm = ConfusionMatrix::canonical();
    for f in 0..folds {
        let (held, fit): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| fold[i] == f);
        if held.is_empty() || fit.is_empty() {
            continue;
        }
        let xs: Vec<&[f64]> = fit.iter().map(|&i| rows[i].features.as_slice()).collect();
        let ys: Vec<PhonemeLabel> = fit.iter().map(|&i| labels[i]).collect();
        let th = train_hierarchy(h, &xs, &ys, cfg)?;
        let test_x: Vec<&[f64]> = held.iter().map(|&i| rows[i].features.as_slice()).collect();
        for (&i, p) in held.iter().zip(th.predict_batch(&test_x)?) {
            cm.record(labels[i], p)?;
        }
    }
    Ok(cm)
}

/// Features of the whole corpus and the train/test split over them.
pub struct PreparedData {
    pub rows: Vec<FeatureRow>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl PreparedData {
    pub fn train_rows(&self) -> Vec<&FeatureRow> {
        self.train.iter().map(|&i| &self.rows[i]).collect()
    }

    pub fn test_rows(&self) -> Vec<&FeatureRow> {
        self.test.iter().map(|&i| &self.rows[i]).collect()
    }
}

/// Loads the corpus, extracts features and splits them.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData, ExperimentError> {
    let corpus = cfg.source.load()?;
    let rows = extract_corpus(&corpus, &cfg.mfcc)?;
    drop(corpus);
    let labels: Vec<PhonemeLabel> = rows.iter().map(|r| r.label).collect();
    let speakers: Vec<&str> = rows.iter().map(|r| r.speaker_id.as_str()).collect();
    let (train, test) = split_indices(&labels, &speakers, &cfg.split)?;
    Ok(PreparedData { rows, train, test })
}

/// Obtains the configured confusion matrix and builds the HS-CO tree from it.
/// Cross-fold sources only ever see `train`.
pub fn derive_hsco(
    cfg: &ExperimentConfig,
    traditional: &Hierarchy,
    train: &[&FeatureRow],
) -> Result<(Hierarchy, Derivation), ExperimentError> {
    let matrix = match &cfg.hsco.confusion_source {
        ConfusionSource::CrossFold { folds } => {
            cross_fold_confusions(traditional, train, *folds, cfg.split.seed, &cfg.train_config())?
        }
        ConfusionSource::Table => table_confusion_matrix(),
        ConfusionSource::File { path } => {
            let file = std::fs::File::open(path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            ConfusionMatrix::read_csv(std::io::BufReader::new(file))?
        }
        ConfusionSource::None => return Err(ExperimentError::Config("hs-co requires a confusion source".into())),
    };
    let tree = build_hsco(&matrix, &cfg.hsco.params())?;
    let derivation = Derivation {
        source: cfg.hsco.confusion_source.clone(),
        major_confusions: major_confusions(&matrix, cfg.hsco.k, cfg.hsco.min_fraction)?,
        matrix,
        hierarchy: tree.to_text(),
    };
    Ok((tree, derivation))
}

/// Trains `system` on `train`; hierarchical systems need their tree.
pub fn fit_system(
    cfg: &ExperimentConfig,
    system: System,
    tree: Option<&Hierarchy>,
    train: &[&FeatureRow],
) -> Result<TrainedSystem, ExperimentError> {
    let xs: Vec<&[f64]> = train.iter().map(|r| r.features.as_slice()).collect();
    let ys: Vec<PhonemeLabel> = train.iter().map(|r| r.label).collect();
    Ok(match (system, tree) {
        (System::Flat, _) => TrainedSystem::Flat(train_multiclass(&xs, &ys, &cfg.svm)?),
        (_, Some(h)) => TrainedSystem::Tree(train_hierarchy(h, &xs, &ys, &cfg.train_config())?),
        (_, None) => return Err(ExperimentError::Config(format!("{} needs a hierarchy", system.slug()))),
    })
}

/// Confusion matrix and recall of `model` on `rows`.
pub fn evaluate_system(
    system: System,
    model: &TrainedSystem,
    rows: &[&FeatureRow],
) -> Result<(ConfusionMatrix, RecognitionReport), ExperimentError> {
    let xs: Vec<&[f64]> = rows.iter().map(|r| r.features.as_slice()).collect();
    let predicted = model.predict_batch(&xs)?;
    let confusion = ConfusionMatrix::accumulate_canonical(rows.iter().map(|r| r.label).zip(predicted))?;
    let recall = per_class_recall(&confusion, system.name());
    Ok((confusion, recall))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    run_experiment_with_models(cfg).map(|r| r.report)
}

/// Runs the full pipeline and also returns the trained models.
pub fn run_experiment_with_models(cfg: &ExperimentConfig) -> Result<ExperimentRun, ExperimentError> {
    cfg.validate()?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let data = prepare_data(cfg)?;
    lap("load + features", &mut timings);
    if data.test.is_empty() {
        return Err(ExperimentError::Config("the split left no test data".into()));
    }
    let train = data.train_rows();
    let test = data.test_rows();
    let mut per_label: BTreeMap<PhonemeLabel, (usize, usize)> = BTreeMap::new();
    for r in &train {
        per_label.entry(r.label).or_default().0 += 1;
    }
    for r in &test {
        per_label.entry(r.label).or_default().1 += 1;
    }
    let split = SplitSummary {
        train: train.len(),
        test: test.len(),
        per_label: per_label.into_iter().map(|(l, (a, b))| (l, a, b)).collect(),
    };
    let test_set_hash = hash_rows(&test);

    let traditional = cfg.traditional_hierarchy()?;
    let mut derivation = None;
    let hsco_tree = if cfg.systems.contains(&System::HsCo) {
        let (tree, d) = derive_hsco(cfg, &traditional, &train)?;
        derivation = Some(d);
        lap("derive hs-co", &mut timings);
        Some(tree)
    } else {
        None
    };

    let mut results = Vec::new();
    let mut models = Vec::new();
    for &system in &cfg.systems {
        let tree = match system {
            System::Flat => None,
            System::HsTc => Some(&traditional),
            System::HsCo => hsco_tree.as_ref(),
        };
        let model = fit_system(cfg, system, tree, &train)?;
        lap(&format!("train {}", system.slug()), &mut timings);
        let (confusion, recall) = evaluate_system(system, &model, &test)?;
        lap(&format!("evaluate {}", system.slug()), &mut timings);
        results.push(SystemResult {
            system,
            recall,
            confusion,
            hierarchy: tree.map(Hierarchy::to_text),
        });
        models.push((system, model));
    }

    Ok(ExperimentRun {
        report: ExperimentReport {
            config: cfg.clone(),
            split,
            test_set_hash,
            systems: results,
            derivation,
            timings,
        },
        models,
    })
}
