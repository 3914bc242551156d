use std::collections::{BTreeMap, HashSet};

use super::{FineEdge, FineKind, FineRelationGraph, RelationError};

/// Smallest vote count `m` with `m / k ≥ threshold`. The small slack keeps
/// thresholds like `3/10` from rounding up to an extra vote.
pub fn required_votes(threshold: f64, k: usize) -> usize {
    ((threshold * k as f64 - 1e-9).ceil().max(1.0)) as usize
}

/// Keeps each directed `(from, to, kind)` edge that appears in at least
/// `ceil(threshold × K)` of the `K` trials. Repeats within one trial count
/// once. Output edges are sorted by `(from, to, kind)`.
pub fn merge_ensemble(trials: &[FineRelationGraph], threshold: f64) -> Result<FineRelationGraph, RelationError> {
    let first = trials.first().ok_or(RelationError::NoTrials)?;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(RelationError::InvalidThreshold(threshold));
    }
    let ids = first.node_ids();
    for t in trials {
        t.validate()?;
        if t.node_ids() != ids || t.nodes.len() != first.nodes.len() {
            return Err(RelationError::InconsistentTrials);
        }
    }

    let needed = required_votes(threshold, trials.len());
    let mut votes: BTreeMap<(&str, &str, FineKind), (usize, &FineEdge)> = BTreeMap::new();
    for t in trials {
        let mut seen = HashSet::new();
        for e in &t.edges {
            if seen.insert(e.key()) {
                votes.entry(e.key()).or_insert((0, e)).0 += 1;
            }
        }
    }
    let edges = votes
        .into_values()
        .filter(|(count, _)| *count >= needed)
        .map(|(_, e)| e.clone())
        .collect();
    Ok(FineRelationGraph {
        nodes: first.nodes.clone(),
        edges,
    })
}
