//! Clusters of mutually confused labels: connected components of the graph
//! whose edges join labels confused with each other at rate `tau` or more.

use std::collections::BTreeSet;

use super::{ConfusionError, ConfusionMatrix};
use crate::phoneme::PhonemeLabel;

/// Symmetric confusion strength: the larger of the two row-normalized rates.
pub fn edge_weight(cm: &ConfusionMatrix, a: PhonemeLabel, b: PhonemeLabel) -> Result<f64, ConfusionError> {
    Ok(cm.fraction(a, b)?.max(cm.fraction(b, a)?))
}

fn check(cm: &ConfusionMatrix, subset: &[PhonemeLabel], tau: f64) -> Result<Vec<PhonemeLabel>, ConfusionError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ConfusionError::InvalidParameter(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    let nodes: BTreeSet<PhonemeLabel> = subset.iter().copied().collect();
    for &l in &nodes {
        cm.position(l)?;
    }
    Ok(nodes.into_iter().collect())
}

/// Components over `nodes` (sorted) given an edge predicate; each component
/// sorted, components ordered by first member.
fn components(nodes: &[PhonemeLabel], adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<PhonemeLabel>> {
    let n = nodes.len();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[start] = id;
        let mut stack = vec![start];
        let mut members = vec![start];
        while let Some(u) = stack.pop() {
            #[allow(clippy::needless_range_loop)]
            for v in 0..n {
                if comp[v] == usize::MAX && adjacent(u, v) {
                    comp[v] = id;
                    stack.push(v);
                    members.push(v);
                }
            }
        }
        members.sort_unstable();
        out.push(members.into_iter().map(|i| nodes[i]).collect::<Vec<_>>());
    }
    // Nodes are sorted and every component is discovered from its smallest
    // member, so `out` is already ordered by first element.
    out
}

pub fn confusion_graph_components(
    cm: &ConfusionMatrix,
    subset: &[PhonemeLabel],
    tau: f64,
) -> Result<Vec<Vec<PhonemeLabel>>, ConfusionError> {
    components_with_cap(cm, subset, tau, None)
}

/// As [`confusion_graph_components`]; components larger than `max_size` are
/// split by deleting their weakest edges (ties by label pair) until every
/// piece fits.
pub fn components_with_cap(
    cm: &ConfusionMatrix,
    subset: &[PhonemeLabel],
    tau: f64,
    max_size: Option<usize>,
) -> Result<Vec<Vec<PhonemeLabel>>, ConfusionError> {
    let nodes = check(cm, subset, tau)?;
    if max_size == Some(0) {
        return Err(ConfusionError::InvalidParameter(
            "max component size must be positive".into(),
        ));
    }
    let n = nodes.len();
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                weights[i][j] = edge_weight(cm, nodes[i], nodes[j])?;
            }
        }
    }
    let mut edges: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && weights[i][j] >= tau).collect())
        .collect();
    let mut result = components(&nodes, |u, v| edges[u][v]);
    let Some(cap) = max_size else {
        return Ok(result);
    };

    while let Some(pos) = result.iter().position(|c| c.len() > cap) {
        let comp = result.remove(pos);
        let idx: Vec<usize> = comp
            .iter()
            .map(|l| nodes.binary_search(l).expect("member of nodes"))
            .collect();
        let mut candidates: Vec<(f64, usize, usize)> = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .filter(|&(i, j)| i < j && edges[i][j])
            .map(|(i, j)| (weights[i][j], i, j))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut pieces = vec![comp.clone()];
        for (_, i, j) in candidates {
            edges[i][j] = false;
            edges[j][i] = false;
            pieces = components(&comp, |u, v| edges[idx[u]][idx[v]]);
            if pieces.len() > 1 {
                break;
            }
        }
        result.extend(pieces);
        result.sort();
    }
    Ok(result)
}
