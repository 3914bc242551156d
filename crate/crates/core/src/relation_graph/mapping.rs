use std::collections::BTreeMap;

use super::{ConstraintEdge, ConstraintGraph, FineKind, FineRelationGraph, GraphNode, RelationError};

pub const DEFAULT_FLAT_LABELS: [&str; 4] = ["ground", "floor", "wall", "table-top"];

#[derive(Debug, Clone, PartialEq)]
pub struct MappingOptions {
    /// Labels of static nodes treated as flat supporting surfaces. Matching
    /// ignores case and any non-alphanumeric characters.
    pub flat_labels: Vec<String>,
}

impl Default for MappingOptions {
    fn default() -> Self {
        Self {
            flat_labels: DEFAULT_FLAT_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn normalize_label(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl MappingOptions {
    pub fn is_flat(&self, node: &GraphNode) -> bool {
        if !node.is_static {
            return false;
        }
        let label = normalize_label(&node.label);
        self.flat_labels.iter().any(|l| normalize_label(l) == label)
    }
}

/// Reduces fine relations to constraint edges.
///
/// Per unordered node pair: edges in both directions (a `Touch` counts as
/// both) give one `Contact`; edges in a single direction give one `Support`
/// from supporter to supported, upgraded to `FlatSupport` (with default sigma)
/// when the supporter is a static flat surface.
pub fn map_to_constraints(fine: &FineRelationGraph, opts: &MappingOptions) -> Result<ConstraintGraph, RelationError> {
    fine.validate()?;
    // Keyed by the lexically ordered pair: (forward = lo→hi, backward = hi→lo).
    let mut pairs: BTreeMap<(&str, &str), (bool, bool)> = BTreeMap::new();
    for e in &fine.edges {
        let (lo, hi, forward) = if e.from < e.to {
            (e.from.as_str(), e.to.as_str(), true)
        } else {
            (e.to.as_str(), e.from.as_str(), false)
        };
        let dirs = pairs.entry((lo, hi)).or_insert((false, false));
        if e.kind == FineKind::Touch {
            *dirs = (true, true);
        } else if forward {
            dirs.0 = true;
        } else {
            dirs.1 = true;
        }
    }

    let edges = pairs
        .into_iter()
        .map(|((lo, hi), dirs)| match dirs {
            (true, true) => ConstraintEdge::contact(lo, hi),
            (forward, _) => {
                let (supporter, supported) = if forward { (lo, hi) } else { (hi, lo) };
                let node = fine.node(supporter).expect("validated");
                if opts.is_flat(node) {
                    ConstraintEdge::flat_support(supporter, supported, None)
                } else {
                    ConstraintEdge::support(supporter, supported)
                }
            }
        })
        .collect();
    let mut graph = ConstraintGraph {
        nodes: fine.nodes.clone(),
        edges,
    };
    graph.canonicalize();
    Ok(graph)
}
