use serde::{Deserialize, Serialize};

use super::{Hierarchy, HierarchyError, Tree};
use crate::confusion::{components_with_cap, ConfusionMatrix};
use crate::phoneme::{BroadClass, PhonemeLabel};

pub const HSTC_NAME: &str = "hs-tc";
pub const HSCO_NAME: &str = "hs-co";

fn members(class: BroadClass) -> Vec<PhonemeLabel> {
    class
        .members()
        .iter()
        .map(|s| PhonemeLabel::parse(s).expect("inventory symbol"))
        .collect()
}

/// Root → the seven articulatory groups → leaves.
pub fn build_hstc() -> Hierarchy {
    let groups = BroadClass::ALL
        .iter()
        .map(|&class| Tree::group(class.name(), members(class).into_iter().map(Tree::leaf).collect()))
        .collect();
    Hierarchy::new(HSTC_NAME, Tree::group("root", groups)).expect("the traditional grouping is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HscoParams {
    /// Edge threshold on the row-normalized confusion rate.
    pub tau: f64,
    /// Put semivowels under the vowel branch instead of the consonant branch.
    pub semivowels_in_vowel_branch: bool,
    /// Split clusters larger than this by dropping their weakest edges.
    pub max_cluster_size: Option<usize>,
}

impl Default for HscoParams {
    fn default() -> Self {
        HscoParams {
            tau: 0.1,
            semivowels_in_vowel_branch: false,
            max_cluster_size: None,
        }
    }
}

/// Four-level confusion-isolating hierarchy.
///
/// 1. vowel branch vs consonant branch;
/// 2. broad classes: vowels (and optionally semivowels) | semivowels,
///    stops + other stops, nasals, fricatives + affricates;
/// 3. confusion clusters inside each broad class;
/// 4. leaves.
///
/// Single-child nodes (a branch with one class, a class forming one cluster,
/// a singleton cluster) are pass-through so every leaf sits at depth 4.
pub fn build_hsco(cm: &ConfusionMatrix, params: &HscoParams) -> Result<Hierarchy, HierarchyError> {
    if !(params.tau > 0.0 && params.tau < 1.0) {
        return Err(HierarchyError::Invalid(format!(
            "tau must lie in (0, 1), got {}",
            params.tau
        )));
    }
    let missing: Vec<String> = PhonemeLabel::all()
        .into_iter()
        .filter(|&l| !cm.contains(l))
        .map(|l| l.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(HierarchyError::MissingLabels(missing.join(" ")));
    }

    let semivowels = ("semivowels", members(BroadClass::Semivowels));
    let mut vowel_classes = vec![("vowels", members(BroadClass::Vowels))];
    let mut consonant_classes = Vec::new();
    if params.semivowels_in_vowel_branch {
        vowel_classes.push(semivowels);
    } else {
        consonant_classes.push(semivowels);
    }
    let merge = |a: BroadClass, b: BroadClass| {
        let mut m = members(a);
        m.extend(members(b));
        m
    };
    consonant_classes.push(("stops", merge(BroadClass::Stops, BroadClass::OtherStops)));
    consonant_classes.push(("nasals", members(BroadClass::Nasals)));
    consonant_classes.push(("fricatives", merge(BroadClass::Fricatives, BroadClass::Affricates)));

    let class_tree = |(name, labels): (&str, Vec<PhonemeLabel>)| -> Result<Tree, HierarchyError> {
        let clusters = components_with_cap(cm, &labels, params.tau, params.max_cluster_size)?;
        let children = clusters
            .into_iter()
            .map(|cluster| {
                let cluster_name = format!(
                    "{name}:{}",
                    cluster.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("+")
                );
                Tree::group_or_pass(cluster_name, cluster.into_iter().map(Tree::leaf).collect())
            })
            .collect();
        Ok(Tree::group_or_pass(name, children))
    };
    let branch = |name: &str, classes: Vec<(&str, Vec<PhonemeLabel>)>| -> Result<Tree, HierarchyError> {
        let children = classes.into_iter().map(class_tree).collect::<Result<Vec<_>, _>>()?;
        Ok(Tree::group_or_pass(name, children))
    };
    let root = Tree::group(
        "root",
        vec![branch("vowel", vowel_classes)?, branch("consonant", consonant_classes)?],
    );
    Hierarchy::new(HSCO_NAME, root)
}
