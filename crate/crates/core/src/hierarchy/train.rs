use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Hierarchy, HierarchyError, NodeId, NodeKind};
use crate::phoneme::PhonemeLabel;
use crate::svm::{check_features, load_model, save_model, train_multiclass, MulticlassModel, SvmConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyTrainConfig {
    pub svm: SvmConfig,
    /// Per-node SVM settings, keyed by group name.
    pub node_overrides: BTreeMap<String, SvmConfig>,
    /// Leaves with fewer training samples are pruned.
    pub min_samples: usize,
}

impl Default for HierarchyTrainConfig {
    fn default() -> Self {
        HierarchyTrainConfig {
            svm: SvmConfig::default(),
            node_overrides: BTreeMap::new(),
            min_samples: 1,
        }
    }
}

impl HierarchyTrainConfig {
    pub fn with_svm(svm: SvmConfig) -> Self {
        HierarchyTrainConfig { svm, ..Self::default() }
    }

    pub fn svm_for(&self, node: &str) -> &SvmConfig {
        self.node_overrides.get(node).unwrap_or(&self.svm)
    }
}

/// Decision rule of an internal node.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeModel {
    /// One-vs-one SVM over child positions.
    Classifier(MulticlassModel<usize>),
    /// Only one child saw training data (or the node is pass-through).
    Forced(usize),
    /// No training data reached this node.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub node: NodeId,
    pub name: String,
    pub samples: usize,
    /// Training samples routed to each child, in child order.
    pub per_child: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: HierarchyTrainConfig,
    pub n_features: usize,
    pub n_samples: usize,
    /// Internal nodes in id order.
    pub nodes: Vec<NodeStats>,
    /// Leaves dropped for having fewer than `min_samples` samples, with their counts.
    pub pruned_leaves: Vec<(PhonemeLabel, usize)>,
    /// Leaves without any training sample.
    pub absent_leaves: Vec<PhonemeLabel>,
    /// Internal nodes no training sample reaches.
    pub unreachable_nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHierarchy {
    pub hierarchy: Hierarchy,
    /// Indexed by node id; `None` for leaves.
    pub models: Vec<Option<NodeModel>>,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub label: PhonemeLabel,
    /// Internal nodes visited, root first.
    pub path: Vec<NodeId>,
}

/// Trains every internal node on the samples of its subtree, relabeled with
/// the index of the child containing their leaf. Nodes train in parallel.
pub fn train_hierarchy<X: AsRef<[f64]> + Sync>(
    h: &Hierarchy,
    xs: &[X],
    ys: &[PhonemeLabel],
    cfg: &HierarchyTrainConfig,
) -> Result<TrainedHierarchy, HierarchyError> {
    if xs.is_empty() {
        return Err(HierarchyError::EmptyData);
    }
    if xs.len() != ys.len() {
        return Err(crate::svm::SvmError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        }
        .into());
    }
    cfg.svm.validate()?;
    for c in cfg.node_overrides.values() {
        c.validate()?;
    }
    let n_features = check_features(xs)?;

    let mut counts: BTreeMap<PhonemeLabel, usize> = BTreeMap::new();
    for &y in ys {
        if h.leaf(y).is_none() {
            return Err(HierarchyError::UnknownLabel(y));
        }
        *counts.entry(y).or_default() += 1;
    }
    let pruned_leaves: Vec<(PhonemeLabel, usize)> = counts
        .iter()
        .filter(|(_, &n)| n < cfg.min_samples)
        .map(|(&l, &n)| (l, n))
        .collect();
    for (l, n) in &pruned_leaves {
        log::warn!("pruning leaf {l}: {n} training samples < {}", cfg.min_samples);
    }
    let absent_leaves: Vec<PhonemeLabel> = h.labels().into_iter().filter(|l| !counts.contains_key(l)).collect();

    // Child position taken at every internal node on each kept sample's path.
    let paths: HashMap<PhonemeLabel, Vec<NodeId>> = counts
        .keys()
        .map(|&l| (l, h.path_to(l).expect("checked above")))
        .collect();
    let keep: Vec<usize> = (0..ys.len()).filter(|&i| counts[&ys[i]] >= cfg.min_samples).collect();
    let mut routed: Vec<Vec<(usize, usize)>> = vec![Vec::new(); h.len()];
    for &i in &keep {
        let path = &paths[&ys[i]];
        for w in path.windows(2) {
            let pos = h
                .children(w[0])
                .iter()
                .position(|&c| c == w[1])
                .expect("path follows tree edges");
            routed[w[0].0].push((i, pos));
        }
    }

    let internal = h.internal_nodes();
    let trained: Vec<(NodeId, NodeModel)> = internal
        .par_iter()
        .map(|&id| -> Result<(NodeId, NodeModel), HierarchyError> {
            let samples = &routed[id.0];
            let mut present: Vec<usize> = samples.iter().map(|&(_, c)| c).collect();
            present.sort_unstable();
            present.dedup();
            let model = match present.len() {
                0 => NodeModel::Empty,
                1 => NodeModel::Forced(present[0]),
                _ => {
                    let nx: Vec<&[f64]> = samples.iter().map(|&(i, _)| xs[i].as_ref()).collect();
                    let ny: Vec<usize> = samples.iter().map(|&(_, c)| c).collect();
                    let svm = cfg.svm_for(&h.node(id).name);
                    NodeModel::Classifier(train_multiclass(&nx, &ny, svm)?)
                }
            };
            Ok((id, model))
        })
        .collect::<Result<_, _>>()?;

    let mut models: Vec<Option<NodeModel>> = vec![None; h.len()];
    let mut nodes = Vec::with_capacity(internal.len());
    let mut unreachable_nodes = Vec::new();
    for (id, model) in trained {
        let node = h.node(id);
        let mut per_child = vec![0; h.children(id).len()];
        for &(_, c) in &routed[id.0] {
            per_child[c] += 1;
        }
        if model == NodeModel::Empty {
            unreachable_nodes.push(node.name.clone());
        }
        nodes.push(NodeStats {
            node: id,
            name: node.name.clone(),
            samples: routed[id.0].len(),
            per_child,
        });
        models[id.0] = Some(model);
    }

    Ok(TrainedHierarchy {
        hierarchy: h.clone(),
        models,
        metadata: TrainingMetadata {
            config: cfg.clone(),
            n_features,
            n_samples: keep.len(),
            nodes,
            pruned_leaves,
            absent_leaves,
            unreachable_nodes,
        },
    })
}

impl TrainedHierarchy {
    pub fn n_features(&self) -> usize {
        self.metadata.n_features
    }

    pub fn model(&self, id: NodeId) -> Option<&NodeModel> {
        self.models.get(id.0).and_then(Option::as_ref)
    }

    /// Greedy top-down routing from the root to a leaf.
    pub fn classify(&self, x: &[f64]) -> Result<Classification, HierarchyError> {
        if x.len() != self.n_features() {
            return Err(HierarchyError::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        let h = &self.hierarchy;
        let mut id = h.root();
        let mut path = Vec::new();
        loop {
            let node = h.node(id);
            let children = match &node.kind {
                NodeKind::Leaf(label) => return Ok(Classification { label: *label, path }),
                NodeKind::Group { children, .. } => children,
            };
            path.push(id);
            let pos = match self.model(id) {
                Some(NodeModel::Classifier(m)) => m.predict(x)?,
                Some(NodeModel::Forced(c)) => *c,
                Some(NodeModel::Empty) | None => {
                    return Err(HierarchyError::Unreachable {
                        node: node.name.clone(),
                    })
                }
            };
            id = children[pos];
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<PhonemeLabel, HierarchyError> {
        self.classify(x).map(|c| c.label)
    }

    /// Classifies many inputs in parallel; output order follows input order.
    pub fn predict_batch<X: AsRef<[f64]> + Sync>(&self, xs: &[X]) -> Result<Vec<PhonemeLabel>, HierarchyError> {
        xs.par_iter().map(|x| self.predict(x.as_ref())).collect()
    }
}

pub fn classify(th: &TrainedHierarchy, x: &[f64]) -> Result<Classification, HierarchyError> {
    th.classify(x)
}

const MANIFEST_FORMAT: &str = "phonrec-hierarchy";
const MANIFEST_VERSION: u32 = 1;
const HIERARCHY_FILE: &str = "hierarchy.txt";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ManifestModel {
    Svm { file: String },
    Forced { child: usize },
    Empty,
}

#[derive(Serialize, Deserialize)]
struct ManifestNode {
    id: usize,
    name: String,
    model: ManifestModel,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    hierarchy: String,
    nodes: Vec<ManifestNode>,
    metadata: TrainingMetadata,
}

/// Writes `manifest.json`, the tree as `hierarchy.txt`, and one model file
/// per classifier node into `dir`.
pub fn save_trained(th: &TrainedHierarchy, dir: &Path) -> Result<(), HierarchyError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(HIERARCHY_FILE), th.hierarchy.to_text())?;
    let mut nodes = Vec::new();
    for (i, model) in th.models.iter().enumerate() {
        let Some(model) = model else { continue };
        let model = match model {
            NodeModel::Classifier(m) => {
                let file = format!("node-{i:03}.json");
                save_model(&dir.join(&file), m)?;
                ManifestModel::Svm { file }
            }
            NodeModel::Forced(c) => ManifestModel::Forced { child: *c },
            NodeModel::Empty => ManifestModel::Empty,
        };
        nodes.push(ManifestNode {
            id: i,
            name: th.hierarchy.node(NodeId(i)).name.clone(),
            model,
        });
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        hierarchy: HIERARCHY_FILE.into(),
        nodes,
        metadata: th.metadata.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| HierarchyError::Manifest(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}

pub fn load_trained(dir: &Path) -> Result<TrainedHierarchy, HierarchyError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| HierarchyError::Manifest(e.to_string()))?;
    if manifest.format != MANIFEST_FORMAT || manifest.version != MANIFEST_VERSION {
        return Err(HierarchyError::Manifest(format!(
            "unsupported manifest {} v{}",
            manifest.format, manifest.version
        )));
    }
    let hierarchy = Hierarchy::parse(&fs::read_to_string(dir.join(&manifest.hierarchy))?)?;
    let mut models: Vec<Option<NodeModel>> = vec![None; hierarchy.len()];
    for node in manifest.nodes {
        if node.id >= hierarchy.len() || hierarchy.node(NodeId(node.id)).name != node.name {
            return Err(HierarchyError::Manifest(format!(
                "node {} ({}) does not match the hierarchy",
                node.id, node.name
            )));
        }
        let n_children = hierarchy.children(NodeId(node.id)).len();
        let model = match node.model {
            ManifestModel::Svm { file } => {
                let m: MulticlassModel<usize> = load_model(&dir.join(file))?;
                if m.labels.iter().any(|&c| c >= n_children) || m.n_features != manifest.metadata.n_features {
                    return Err(HierarchyError::Manifest(format!(
                        "model for node {} is inconsistent",
                        node.name
                    )));
                }
                NodeModel::Classifier(m)
            }
            ManifestModel::Forced { child } if child < n_children => NodeModel::Forced(child),
            ManifestModel::Forced { child } => {
                return Err(HierarchyError::Manifest(format!(
                    "node {} forced to missing child {child}",
                    node.name
                )))
            }
            ManifestModel::Empty => NodeModel::Empty,
        };
        models[node.id] = Some(model);
    }
    if let Some(id) = hierarchy.internal_nodes().into_iter().find(|id| models[id.0].is_none()) {
        return Err(HierarchyError::Manifest(format!(
            "no model entry for node {}",
            hierarchy.node(id).name
        )));
    }
    Ok(TrainedHierarchy {
        hierarchy,
        models,
        metadata: manifest.metadata,
    })
}
