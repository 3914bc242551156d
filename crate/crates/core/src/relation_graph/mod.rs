//! Scene relation graphs.
//!
//! A [`FineRelationGraph`] holds directed, fine-grained relations
//! (`Stack`, `Lean`, `Hang`, `Touch`) pointing from supporter to supported.
//! [`map_to_constraints`] reduces it to a [`ConstraintGraph`] of
//! `Contact`/`Support`/`FlatSupport` edges that drive the cost terms, and
//! [`merge_ensemble`] votes several noisy fine graphs into one.

mod ensemble;
mod mapping;

pub use ensemble::{merge_ensemble, required_votes};
pub use mapping::{map_to_constraints, MappingOptions, DEFAULT_FLAT_LABELS};

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RelationError {
    #[error("edge references unknown node '{0}'")]
    UnknownNode(String),
    #[error("self-loop on node '{0}'")]
    SelfLoop(String),
    #[error("duplicate node id '{0}'")]
    DuplicateNode(String),
    #[error("duplicate {kind:?} edge between '{a}' and '{b}'")]
    DuplicateEdge { a: String, b: String, kind: ConstraintKind },
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("sigma is only meaningful on FlatSupport edges")]
    UnexpectedSigma,
    #[error("inconsistent trials")]
    InconsistentTrials,
    #[error("no trials to merge")]
    NoTrials,
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(rename = "static", default)]
    pub is_static: bool,
}

impl GraphNode {
    pub fn new(id: impl Into<String>, label: impl Into<String>, is_static: bool) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            is_static,
        }
    }
}

/// Fine-grained relation, directed supporter → supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FineKind {
    #[serde(alias = "stack")]
    Stack,
    #[serde(alias = "lean")]
    Lean,
    #[serde(alias = "hang")]
    Hang,
    /// Symmetric contact; counts as an edge in both directions.
    #[serde(alias = "touch")]
    Touch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineEdge {
    pub from: String,
    pub to: String,
    pub kind: FineKind,
    /// Optional force-direction annotation (e.g. "vertical"). Carried through
    /// unchanged; no cost term reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<String>,
}

impl FineEdge {
    pub fn new(from: impl Into<String>, to: impl Into<String>, kind: FineKind) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind,
            force: None,
        }
    }

    fn key(&self) -> (&str, &str, FineKind) {
        (&self.from, &self.to, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FineRelationGraph {
    pub nodes: Vec<GraphNode>,
    #[serde(default)]
    pub edges: Vec<FineEdge>,
}

fn check_nodes(nodes: &[GraphNode]) -> Result<HashSet<&str>, RelationError> {
    let mut ids = HashSet::with_capacity(nodes.len());
    for n in nodes {
        if !ids.insert(n.id.as_str()) {
            return Err(RelationError::DuplicateNode(n.id.clone()));
        }
    }
    Ok(ids)
}

fn check_endpoints(ids: &HashSet<&str>, from: &str, to: &str) -> Result<(), RelationError> {
    for id in [from, to] {
        if !ids.contains(id) {
            return Err(RelationError::UnknownNode(id.to_string()));
        }
    }
    if from == to {
        return Err(RelationError::SelfLoop(from.to_string()));
    }
    Ok(())
}

impl FineRelationGraph {
    pub fn validate(&self) -> Result<(), RelationError> {
        let ids = check_nodes(&self.nodes)?;
        for e in &self.edges {
            check_endpoints(&ids, &e.from, &e.to)?;
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn node_ids(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.id.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Bilateral: no penetration plus at least one touching point.
    Contact,
    /// Unilateral: the supported object rests on the supporter.
    Support,
    /// Support by a flat static surface, with a contact-band regularizer.
    FlatSupport,
}

/// For `Contact` the endpoints are unordered and stored in lexical order; for
/// the support kinds `from` is the supporter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEdge {
    pub from: String,
    pub to: String,
    #[serde(rename = "type")]
    pub kind: ConstraintKind,
    /// Contact-band width for `FlatSupport`. `None` means the default, which
    /// depends on the supported object's size and is resolved at scene build.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl ConstraintEdge {
    pub fn contact(a: impl Into<String>, b: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        let (from, to) = if a <= b { (a, b) } else { (b, a) };
        Self {
            from,
            to,
            kind: ConstraintKind::Contact,
            sigma: None,
        }
    }

    pub fn support(supporter: impl Into<String>, supported: impl Into<String>) -> Self {
        Self {
            from: supporter.into(),
            to: supported.into(),
            kind: ConstraintKind::Support,
            sigma: None,
        }
    }

    pub fn flat_support(supporter: impl Into<String>, supported: impl Into<String>, sigma: Option<f64>) -> Self {
        Self {
            from: supporter.into(),
            to: supported.into(),
            kind: ConstraintKind::FlatSupport,
            sigma,
        }
    }

    /// Stable identifier used in reports and error messages.
    pub fn label(&self) -> String {
        let arrow = if self.kind == ConstraintKind::Contact { "<->" } else { "->" };
        format!("{:?}({}{}{})", self.kind, self.from, arrow, self.to)
    }

    fn dedup_key(&self) -> (String, String, ConstraintKind) {
        if self.kind == ConstraintKind::Contact && self.to < self.from {
            (self.to.clone(), self.from.clone(), self.kind)
        } else {
            (self.from.clone(), self.to.clone(), self.kind)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintGraph {
    pub nodes: Vec<GraphNode>,
    #[serde(default)]
    pub edges: Vec<ConstraintEdge>,
}

impl ConstraintGraph {
    pub fn validate(&self) -> Result<(), RelationError> {
        let ids = check_nodes(&self.nodes)?;
        let mut seen = HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            check_endpoints(&ids, &e.from, &e.to)?;
            match (e.kind, e.sigma) {
                (ConstraintKind::FlatSupport, Some(s)) if !(s > 0.0 && s.is_finite()) => {
                    return Err(RelationError::InvalidSigma(s))
                }
                (ConstraintKind::Contact | ConstraintKind::Support, Some(_)) => {
                    return Err(RelationError::UnexpectedSigma)
                }
                _ => {}
            }
            let key = e.dedup_key();
            if !seen.insert(key.clone()) {
                return Err(RelationError::DuplicateEdge {
                    a: key.0,
                    b: key.1,
                    kind: key.2,
                });
            }
        }
        Ok(())
    }

    /// Puts edges in canonical `(from, to, type)` order, with `Contact`
    /// endpoints sorted.
    pub fn canonicalize(&mut self) {
        for e in &mut self.edges {
            if e.kind == ConstraintKind::Contact && e.to < e.from {
                std::mem::swap(&mut e.from, &mut e.to);
            }
        }
        self.edges
            .sort_by(|x, y| (&x.from, &x.to, x.kind).cmp(&(&y.from, &y.to, y.kind)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fine_graph_json_layout() {
        let json = r#"{"nodes":[{"id":"a","label":"box","static":false},{"id":"g","label":"ground","static":true}],
                       "edges":[{"from":"g","to":"a","kind":"Stack"},{"from":"a","to":"g","kind":"lean","force":"vertical"}]}"#;
        let g: FineRelationGraph = serde_json::from_str(json).unwrap();
        g.validate().unwrap();
        assert_eq!(g.edges[1].kind, FineKind::Lean);
        assert_eq!(g.edges[1].force.as_deref(), Some("vertical"));
        let out = serde_json::to_string(&g).unwrap();
        assert!(out.starts_with(r#"{"nodes":[{"id":"a","label":"box","static":false}"#));
        assert!(out.contains(r#"{"from":"g","to":"a","kind":"Stack"}"#));
        let bad = json.replace("\"Stack\"", "\"Glue\"");
        assert!(serde_json::from_str::<FineRelationGraph>(&bad).is_err());
    }

    #[test]
    fn validation_errors() {
        let nodes = vec![GraphNode::new("a", "", false), GraphNode::new("b", "", false)];
        let g = FineRelationGraph {
            nodes: nodes.clone(),
            edges: vec![FineEdge::new("a", "a", FineKind::Touch)],
        };
        assert_eq!(g.validate(), Err(RelationError::SelfLoop("a".into())));
        let g = FineRelationGraph {
            nodes: nodes.clone(),
            edges: vec![FineEdge::new("a", "zz", FineKind::Stack)],
        };
        assert_eq!(g.validate(), Err(RelationError::UnknownNode("zz".into())));
        let mut dup = nodes.clone();
        dup.push(GraphNode::new("a", "", true));
        assert!(matches!(
            FineRelationGraph { nodes: dup, edges: vec![] }.validate(),
            Err(RelationError::DuplicateNode(_))
        ));

        let c = ConstraintGraph {
            nodes: nodes.clone(),
            edges: vec![ConstraintEdge::contact("a", "b"), ConstraintEdge::contact("b", "a")],
        };
        assert!(matches!(c.validate(), Err(RelationError::DuplicateEdge { .. })));
        let c = ConstraintGraph {
            nodes,
            edges: vec![ConstraintEdge::flat_support("a", "b", Some(0.0))],
        };
        assert_eq!(c.validate(), Err(RelationError::InvalidSigma(0.0)));
    }

    #[test]
    fn constraint_edge_json() {
        let e = ConstraintEdge::flat_support("ground", "van", Some(0.02));
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"from":"ground","to":"van","type":"FlatSupport","sigma":0.02}"#
        );
        let c = ConstraintEdge::contact("z", "a");
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"from":"a","to":"z","type":"Contact"}"#);
    }
}
