use serde::{Deserialize, Serialize};

use crate::constraints::{evaluate, ConstraintError, EvalOptions, SceneState};
use crate::geometry::Aabb;
use crate::relation_graph::{ConstraintGraph, ConstraintKind};

/// Default penetration threshold as a fraction of the scene diagonal.
pub const DEFAULT_PENETRATION_FRACTION: f64 = 1e-3;
/// Default support/contact gap threshold as a fraction of the scene diagonal.
pub const DEFAULT_GAP_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub penetration: f64,
    pub gap: f64,
}

impl Thresholds {
    /// Scale-relative defaults for `scene`.
    pub fn for_scene(scene: &SceneState) -> Self {
        let d = scene_diagonal(scene);
        Self {
            penetration: DEFAULT_PENETRATION_FRACTION * d,
            gap: DEFAULT_GAP_FRACTION * d,
        }
    }
}

/// Diagonal of the world-space bounding box of every object at its pose.
pub fn scene_diagonal(scene: &SceneState) -> f64 {
    let mut bb = Aabb::empty();
    for o in scene.objects() {
        for v in o.mesh().vertices() {
            bb.grow(&o.pose.apply(v));
        }
    }
    if scene.is_empty() {
        0.0
    } else {
        bb.diagonal()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub a: String,
    pub b: String,
    /// Deepest sample penetration over both directions.
    pub max_penetration: f64,
    /// Contact edges only: largest per-direction `max(min D, 0)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contact_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    pub supporter: String,
    pub supported: String,
    #[serde(rename = "type")]
    pub kind: ConstraintKind,
    /// `|min D_supporter|` over the supported samples.
    pub gap: f64,
    /// FlatSupport only; `None` when no sample lies in the band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub thresholds: Thresholds,
    pub pairs: Vec<PairMetrics>,
    pub supports: Vec<SupportMetrics>,
    pub max_penetration: f64,
    pub max_gap: f64,
    pub total_cost: f64,
    pub pass: bool,
}

/// Measures every edge of `graph`.
///
/// Penetration is checked bilaterally for every pair joined by an edge. The
/// report passes iff every penetration and gap is below its threshold.
pub fn validate_metrics(
    scene: &SceneState,
    graph: &ConstraintGraph,
    thresholds: &Thresholds,
) -> Result<ValidationReport, ConstraintError> {
    let ev = evaluate(scene, graph, &EvalOptions::default(), false)?;
    let mut pairs: Vec<PairMetrics> = Vec::new();
    let mut supports = Vec::new();
    let (mut max_pen, mut max_gap) = (0.0f64, 0.0f64);

    for e in &ev.breakdown.edges {
        let (a, b) = (&e.edge.from, &e.edge.to);
        let depth = bilateral_depth(scene, a, b)?;
        max_pen = max_pen.max(depth);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let contact_gap = (e.edge.kind == ConstraintKind::Contact).then_some(e.gap);
        match pairs.iter_mut().find(|p| &p.a == lo && &p.b == hi) {
            Some(p) => {
                if contact_gap.is_some() {
                    p.contact_gap = contact_gap;
                }
            }
            None => pairs.push(PairMetrics {
                a: lo.clone(),
                b: hi.clone(),
                max_penetration: depth,
                contact_gap,
            }),
        }
        if let Some(g) = contact_gap {
            max_gap = max_gap.max(g);
        } else {
            max_gap = max_gap.max(e.gap);
            supports.push(SupportMetrics {
                supporter: a.clone(),
                supported: b.clone(),
                kind: e.edge.kind,
                gap: e.gap,
                band_mean: match e.band_samples {
                    Some(n) if n > 0 => Some(e.band_term),
                    _ => None,
                },
                sigma: e.edge.sigma,
            });
        }
    }
    pairs.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    let pass = max_pen < thresholds.penetration && max_gap < thresholds.gap;
    Ok(ValidationReport {
        thresholds: *thresholds,
        pairs,
        supports,
        max_penetration: max_pen,
        max_gap,
        total_cost: ev.breakdown.total,
        pass,
    })
}

fn bilateral_depth(scene: &SceneState, a: &str, b: &str) -> Result<f64, ConstraintError> {
    let dangling = || ConstraintError::DanglingEdge(format!("{a}-{b}"));
    let (oa, ob) = (scene.get(a).ok_or_else(dangling)?, scene.get(b).ok_or_else(dangling)?);
    let mut depth = 0.0f64;
    for (owner, subject) in [(oa, ob), (ob, oa)] {
        let rel = owner.pose.inverse().compose(&subject.pose);
        for p in subject.samples().points() {
            depth = depth.max(-owner.sdf().distance(&rel.apply(p)));
        }
    }
    Ok(depth)
}
