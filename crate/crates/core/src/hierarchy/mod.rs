//! Trees of classifiers over phoneme labels.
//!
//! Internal nodes partition their labels among children; leaves carry one
//! label each. A node with a single child must be flagged pass-through: such
//! chains exist only to keep every leaf at a fixed depth.
//!
//! Text format, two spaces of indentation per level:
//!
//! ```text
//! hierarchy hs-tc
//! group root
//!   group vowels
//!     leaf aa
//!     leaf ae
//!   pass affricates-only
//!     leaf ch
//! ```

mod build;
mod train;

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confusion::ConfusionError;
use crate::phoneme::PhonemeLabel;
use crate::svm::SvmError;

pub use build::{build_hsco, build_hstc, HscoParams, HSCO_NAME, HSTC_NAME};
pub use train::{
    classify, load_trained, save_trained, train_hierarchy, Classification, HierarchyTrainConfig, NodeModel, NodeStats,
    TrainedHierarchy, TrainingMetadata,
};

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("invalid hierarchy: {0}")]
    Invalid(String),
    #[error("hierarchy file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("label {0} does not occur in the hierarchy")]
    UnknownLabel(PhonemeLabel),
    #[error("confusion matrix lacks labels: {0}")]
    MissingLabels(String),
    #[error("no training data")]
    EmptyData,
    #[error("routing reached node {node:?}, which has no trained subtree")]
    Unreachable { node: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("trained hierarchy manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Confusion(#[from] ConfusionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Construction-time tree description.
#[derive(Debug, Clone, PartialEq)]
pub enum Tree {
    Group {
        name: String,
        pass_through: bool,
        children: Vec<Tree>,
    },
    Leaf(PhonemeLabel),
}

impl Tree {
    pub fn group(name: impl Into<String>, children: Vec<Tree>) -> Tree {
        Tree::Group {
            name: name.into(),
            pass_through: false,
            children,
        }
    }

    /// A group that is flagged pass-through when it ends up with one child.
    pub fn group_or_pass(name: impl Into<String>, children: Vec<Tree>) -> Tree {
        let pass_through = children.len() == 1;
        Tree::Group {
            name: name.into(),
            pass_through,
            children,
        }
    }

    pub fn pass(name: impl Into<String>, child: Tree) -> Tree {
        Tree::Group {
            name: name.into(),
            pass_through: true,
            children: vec![child],
        }
    }

    pub fn leaf(label: PhonemeLabel) -> Tree {
        Tree::Leaf(label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Group { children: Vec<NodeId>, pass_through: bool },
    Leaf(PhonemeLabel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    name: String,
    nodes: Vec<Node>,
    leaf_index: HashMap<PhonemeLabel, NodeId>,
}

impl Hierarchy {
    /// Flattens `tree` (pre-order, root = `NodeId(0)`) and validates it: leaf
    /// labels and group names are unique, groups are non-empty, and exactly
    /// the single-child groups are pass-through.
    pub fn new(name: impl Into<String>, tree: Tree) -> Result<Self, HierarchyError> {
        let mut h = Hierarchy {
            name: name.into(),
            nodes: Vec::new(),
            leaf_index: HashMap::new(),
        };
        let mut group_names = BTreeSet::new();
        h.push(tree, None, 0, &mut group_names)?;
        Ok(h)
    }

    fn push(
        &mut self,
        tree: Tree,
        parent: Option<NodeId>,
        depth: usize,
        group_names: &mut BTreeSet<String>,
    ) -> Result<NodeId, HierarchyError> {
        let id = NodeId(self.nodes.len());
        match tree {
            Tree::Leaf(label) => {
                if self.leaf_index.insert(label, id).is_some() {
                    return Err(HierarchyError::Invalid(format!(
                        "label {label} appears in more than one leaf"
                    )));
                }
                self.nodes.push(Node {
                    name: label.to_string(),
                    parent,
                    depth,
                    kind: NodeKind::Leaf(label),
                });
            }
            Tree::Group {
                name,
                pass_through,
                children,
            } => {
                if name.is_empty() || name.chars().any(char::is_whitespace) {
                    return Err(HierarchyError::Invalid(format!("bad group name {name:?}")));
                }
                if !group_names.insert(name.clone()) {
                    return Err(HierarchyError::Invalid(format!("duplicate group name {name:?}")));
                }
                match (children.len(), pass_through) {
                    (0, _) => return Err(HierarchyError::Invalid(format!("group {name:?} has no children"))),
                    (1, false) => {
                        return Err(HierarchyError::Invalid(format!(
                            "group {name:?} has one child but is not flagged pass-through"
                        )))
                    }
                    (n, true) if n > 1 => {
                        return Err(HierarchyError::Invalid(format!(
                            "pass-through group {name:?} has {n} children"
                        )))
                    }
                    _ => {}
                }
                self.nodes.push(Node {
                    name,
                    parent,
                    depth,
                    kind: NodeKind::Group {
                        children: Vec::new(),
                        pass_through,
                    },
                });
                let mut ids = Vec::with_capacity(children.len());
                for child in children {
                    ids.push(self.push(child, Some(id), depth + 1, group_names)?);
                }
                if let NodeKind::Group { children, .. } = &mut self.nodes[id.0].kind {
                    *children = ids;
                }
            }
        }
        Ok(id)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id.0].kind {
            NodeKind::Group { children, .. } => children,
            NodeKind::Leaf(_) => &[],
        }
    }

    pub fn is_pass_through(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].kind, NodeKind::Group { pass_through: true, .. })
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|(_, n)| matches!(n.kind, NodeKind::Group { .. }))
            .map(|(id, _)| id)
            .collect()
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| matches!(n.kind, NodeKind::Group { .. }) && n.name == name)
            .map(NodeId)
    }

    pub fn leaf(&self, label: PhonemeLabel) -> Option<NodeId> {
        self.leaf_index.get(&label).copied()
    }

    /// Leaf labels in pre-order.
    pub fn labels(&self) -> Vec<PhonemeLabel> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Leaf(l) => Some(l),
                NodeKind::Group { .. } => None,
            })
            .collect()
    }

    /// Leaf labels below `id`, in pre-order.
    pub fn subtree_labels(&self, id: NodeId) -> Vec<PhonemeLabel> {
        match &self.nodes[id.0].kind {
            NodeKind::Leaf(l) => vec![*l],
            NodeKind::Group { children, .. } => children.iter().flat_map(|&c| self.subtree_labels(c)).collect(),
        }
    }

    /// Node ids from the root down to (and including) the leaf for `label`.
    pub fn path_to(&self, label: PhonemeLabel) -> Option<Vec<NodeId>> {
        let mut id = self.leaf(label)?;
        let mut path = vec![id];
        while let Some(p) = self.nodes[id.0].parent {
            path.push(p);
            id = p;
        }
        path.reverse();
        Some(path)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    /// Depth of the deepest leaf (root has depth 0).
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaf_depths(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Leaf(_)))
            .map(|n| n.depth)
            .collect()
    }

    /// True when every label of `universe` sits in exactly one leaf and no other leaf exists.
    pub fn is_partition_of(&self, universe: &[PhonemeLabel]) -> bool {
        let leaves = self.labels();
        let mine: BTreeSet<_> = leaves.iter().collect();
        let theirs: BTreeSet<_> = universe.iter().collect();
        mine.len() == leaves.len() && mine == theirs
    }

    pub fn to_tree(&self) -> Tree {
        self.tree_at(self.root())
    }

    fn tree_at(&self, id: NodeId) -> Tree {
        let node = &self.nodes[id.0];
        match &node.kind {
            NodeKind::Leaf(l) => Tree::Leaf(*l),
            NodeKind::Group { children, pass_through } => Tree::Group {
                name: node.name.clone(),
                pass_through: *pass_through,
                children: children.iter().map(|&c| self.tree_at(c)).collect(),
            },
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("hierarchy {}\n", self.name);
        for node in &self.nodes {
            let indent = "  ".repeat(node.depth);
            let _ = match &node.kind {
                NodeKind::Leaf(l) => writeln!(out, "{indent}leaf {l}"),
                NodeKind::Group { pass_through: true, .. } => writeln!(out, "{indent}pass {}", node.name),
                NodeKind::Group { .. } => writeln!(out, "{indent}group {}", node.name),
            };
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, HierarchyError> {
        // (depth, line number, kind, name)
        let mut items: Vec<(usize, usize, &str, &str)> = Vec::new();
        let mut name = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |reason: String| HierarchyError::Parse { line, reason };
            let content = raw.trim_end();
            if content.trim().is_empty() || content.trim_start().starts_with('#') {
                continue;
            }
            let spaces = content.len() - content.trim_start_matches(' ').len();
            if content[spaces..].starts_with('\t') {
                return Err(err("tabs are not allowed for indentation".into()));
            }
            let mut words = content.split_whitespace();
            let (kind, value) = match (words.next(), words.next(), words.next()) {
                (Some(k), Some(v), None) => (k, v),
                _ => return Err(err(format!("expected `<kind> <name>`, got {:?}", content.trim()))),
            };
            if name.is_none() {
                if kind != "hierarchy" || spaces != 0 {
                    return Err(err("first line must be `hierarchy <name>`".into()));
                }
                name = Some(value.to_string());
                continue;
            }
            if spaces % 2 != 0 {
                return Err(err("indentation must be a multiple of two spaces".into()));
            }
            if !matches!(kind, "group" | "pass" | "leaf") {
                return Err(err(format!("unknown node kind {kind:?}")));
            }
            items.push((spaces / 2, line, kind, value));
        }
        let name = name.ok_or(HierarchyError::Parse {
            line: 1,
            reason: "empty hierarchy file".into(),
        })?;
        if items.is_empty() {
            return Err(HierarchyError::Parse {
                line: 1,
                reason: "no nodes".into(),
            });
        }
        let mut pos = 0;
        let tree = parse_node(&items, &mut pos, 0)?;
        if let Some(&(_, line, _, _)) = items.get(pos) {
            return Err(HierarchyError::Parse {
                line,
                reason: "more than one root node".into(),
            });
        }
        Hierarchy::new(name, tree)
    }
}

fn parse_node(items: &[(usize, usize, &str, &str)], pos: &mut usize, depth: usize) -> Result<Tree, HierarchyError> {
    let (d, line, kind, value) = items[*pos];
    if d != depth {
        return Err(HierarchyError::Parse {
            line,
            reason: format!("expected indentation level {depth}, found {d}"),
        });
    }
    *pos += 1;
    if kind == "leaf" {
        if items.get(*pos).is_some_and(|next| next.0 > depth) {
            return Err(HierarchyError::Parse {
                line: items[*pos].1,
                reason: "leaf nodes cannot have children".into(),
            });
        }
        let label = PhonemeLabel::parse(value).map_err(|e| HierarchyError::Parse {
            line,
            reason: e.to_string(),
        })?;
        return Ok(Tree::Leaf(label));
    }
    let mut children = Vec::new();
    while items.get(*pos).is_some_and(|next| next.0 > depth) {
        children.push(parse_node(items, pos, depth + 1)?);
    }
    Ok(Tree::Group {
        name: value.to_string(),
        pass_through: kind == "pass",
        children,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phoneme::label;

    fn small() -> Hierarchy {
        Hierarchy::new(
            "small",
            Tree::group(
                "root",
                vec![
                    Tree::group("v", vec![Tree::leaf(label("aa")), Tree::leaf(label("iy"))]),
                    Tree::pass("c", Tree::leaf(label("s"))),
                ],
            ),
        )
        .unwrap()
    }

    #[test]
    fn structure_queries() {
        let h = small();
        assert_eq!(h.len(), 6);
        assert_eq!(h.depth(), 2);
        assert_eq!(h.labels(), vec![label("aa"), label("iy"), label("s")]);
        let path = h.path_to(label("iy")).unwrap();
        let names: Vec<_> = path.iter().map(|&id| h.node(id).name.as_str()).collect();
        assert_eq!(names, vec!["root", "v", "iy"]);
        assert!(h.is_pass_through(h.find("c").unwrap()));
        assert_eq!(h.subtree_labels(h.find("v").unwrap()), vec![label("aa"), label("iy")]);
        assert!(h.is_partition_of(&[label("s"), label("aa"), label("iy")]));
        assert!(!h.is_partition_of(&[label("s"), label("aa")]));
    }

    #[test]
    fn validation() {
        let dup = Tree::group("root", vec![Tree::leaf(label("aa")), Tree::leaf(label("aa"))]);
        assert!(Hierarchy::new("x", dup).is_err());
        let lonely = Tree::group("root", vec![Tree::leaf(label("aa"))]);
        assert!(Hierarchy::new("x", lonely).is_err());
        let empty = Tree::group("root", vec![]);
        assert!(Hierarchy::new("x", empty).is_err());
        let bad_pass = Tree::Group {
            name: "root".into(),
            pass_through: true,
            children: vec![Tree::leaf(label("aa")), Tree::leaf(label("iy"))],
        };
        assert!(Hierarchy::new("x", bad_pass).is_err());
        let dup_names = Tree::group(
            "root",
            vec![
                Tree::pass("g", Tree::leaf(label("aa"))),
                Tree::pass("g", Tree::leaf(label("iy"))),
            ],
        );
        assert!(Hierarchy::new("x", dup_names).is_err());
        assert!(Hierarchy::new("x", Tree::leaf(label("aa"))).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let h = small();
        let text = h.to_text();
        assert_eq!(
            text,
            "hierarchy small\ngroup root\n  group v\n    leaf aa\n    leaf iy\n  pass c\n    leaf s\n"
        );
        assert_eq!(Hierarchy::parse(&text).unwrap(), h);
    }

    #[test]
    fn parse_errors() {
        let cases = [
            ("", 1),
            ("group root\n", 1),
            ("hierarchy x\ngroup root\n   leaf aa\n", 3),
            ("hierarchy x\ngroup root\n  leaf aa\n    leaf iy\n", 4),
            ("hierarchy x\ngroup root\n  leaf zz\n  leaf aa\n", 3),
            ("hierarchy x\nleaf aa\nleaf iy\n", 3),
            ("hierarchy x\ngroup root\n  node aa\n", 3),
        ];
        for (text, line) in cases {
            match Hierarchy::parse(text) {
                Err(HierarchyError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            Hierarchy::parse("hierarchy x\ngroup root\n  leaf aa\n"),
            Err(HierarchyError::Invalid(_))
        ));
    }
}
