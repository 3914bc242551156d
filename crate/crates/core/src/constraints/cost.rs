use nalgebra::{DVector, Point3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::min_norm::min_norm_weights;
use super::scene::{ResolvedEdge, SceneObject, SceneState};
use super::ConstraintError;
use crate::relation_graph::{ConstraintEdge, ConstraintGraph, ConstraintKind};

/// Derivative of a cost with respect to one pose, in the tangent
/// parameterization of [`crate::transforms::RigidPose::retract`] about the
/// object's pivot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PoseGradient {
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

impl PoseGradient {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.rotation.x,
            self.rotation.y,
            self.rotation.z,
            self.translation.x,
            self.translation.y,
            self.translation.z,
        ]
    }

    pub fn is_zero(&self) -> bool {
        self.rotation == Vector3::zeros() && self.translation == Vector3::zeros()
    }
}

/// Cost terms of one edge. Every term is non-negative and
/// `total = penetration_term + separation_term + band_term`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeCost {
    pub edge: ConstraintEdge,
    pub penetration_term: f64,
    pub separation_term: f64,
    pub band_term: f64,
    pub total: f64,
    /// Deepest sample penetration over the evaluated directions.
    pub max_depth: f64,
    /// Contact: largest per-direction separation. Support kinds: `|min D|`.
    pub gap: f64,
    /// FlatSupport only: samples inside the `(0, σ)` band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub edges: Vec<EdgeCost>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Width of the near-tie window for `min` terms, as a fraction of the
    /// probing object's bbox diagonal. Zero selects the single lowest-index
    /// argmin sample. A positive value treats every sample within the window
    /// as tied and uses the minimum-norm convex combination of their
    /// gradients, so a flat face resting under the pivot gets no torque.
    pub tie_band_fraction: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { tie_band_fraction: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub breakdown: CostBreakdown,
    /// One entry per scene object; zero for static objects.
    pub gradients: Vec<PoseGradient>,
}

/// Distances within this fraction of the owner's diagonal count as exactly 0.
pub const SURFACE_SNAP: f64 = 1e-12;

/// SDF of `owner` probed at the samples of `subject`, both at current poses.
struct Probe {
    distances: Vec<f64>,
    /// `∇D_owner` at each sample, in world axes.
    normals: Vec<Vector3<f64>>,
    /// Sample positions in world coordinates.
    world: Vec<Point3<f64>>,
}

fn probe(owner: &SceneObject, subject: &SceneObject) -> Result<Probe, ConstraintError> {
    let samples = subject.samples();
    if samples.is_empty() {
        return Err(ConstraintError::EmptySamples(subject.id().to_string()));
    }
    // Only the relative transform enters the SDF query.
    let relative = owner.pose.inverse().compose(&subject.pose);
    let n = samples.len();
    let snap = SURFACE_SNAP * owner.diagonal();
    let mut out = Probe {
        distances: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        world: Vec::with_capacity(n),
    };
    for p in samples.points() {
        let s = owner.sdf().query(&relative.apply(p));
        // Rounding noise on touching surfaces would otherwise flip indicators.
        out.distances.push(if s.distance.abs() <= snap { 0.0 } else { s.distance });
        out.normals.push(owner.pose.apply_vector(&s.gradient));
        out.world.push(subject.pose.apply(p));
    }
    Ok(out)
}

type Weights = Vec<(usize, f64)>;

/// `|mean of D over D < 0|`, zero when nothing penetrates.
fn penetration(d: &[f64]) -> (f64, Weights) {
    let active: Vec<usize> = (0..d.len()).filter(|&k| d[k] < 0.0).collect();
    if active.is_empty() {
        return (0.0, Vec::new());
    }
    let inv = 1.0 / active.len() as f64;
    let value = -active.iter().map(|&k| d[k]).sum::<f64>() * inv;
    (value, active.into_iter().map(|k| (k, -inv)).collect())
}

/// Minimum value and the samples that carry its gradient.
fn argmin_set(d: &[f64], band: f64) -> (f64, Vec<usize>) {
    let mut best = 0;
    for k in 1..d.len() {
        if d[k] < d[best] {
            best = k;
        }
    }
    let m = d[best];
    if band > 0.0 {
        (m, (0..d.len()).filter(|&k| d[k] <= m + band).collect())
    } else {
        (m, vec![best])
    }
}

/// `max(min D, 0)`.
fn separation(d: &[f64], band: f64) -> (f64, Weights) {
    let (m, set) = argmin_set(d, band);
    if m <= 0.0 {
        return (0.0, Vec::new());
    }
    let w = 1.0 / set.len() as f64;
    (m, set.into_iter().map(|k| (k, w)).collect())
}

/// `|min D|`, split into (penetration part, separation part).
fn abs_min(d: &[f64], band: f64) -> ((f64, f64), Weights) {
    let (m, set) = argmin_set(d, band);
    let sign = if m > 0.0 {
        1.0
    } else if m < 0.0 {
        -1.0
    } else {
        0.0
    };
    let w = sign / set.len() as f64;
    let split = if m < 0.0 { (-m, 0.0) } else { (0.0, m) };
    (split, if sign == 0.0 { Vec::new() } else { set.into_iter().map(|k| (k, w)).collect() })
}

/// Mean of D over samples with `0 < D < σ`; `None` if the band is empty.
fn band_mean(d: &[f64], sigma: f64) -> Option<(f64, Weights, usize)> {
    let band: Vec<usize> = (0..d.len()).filter(|&k| d[k] > 0.0 && d[k] < sigma).collect();
    if band.is_empty() {
        return None;
    }
    let inv = 1.0 / band.len() as f64;
    let value = band.iter().map(|&k| d[k]).sum::<f64>() * inv;
    let n = band.len();
    Some((value, band.into_iter().map(|k| (k, inv)).collect(), n))
}

fn max_depth(d: &[f64]) -> f64 {
    d.iter().fold(0.0f64, |acc, &v| acc.max(-v))
}

struct Accumulator<'a> {
    scene: &'a SceneState,
    grads: Vec<(usize, PoseGradient)>,
    enabled: bool,
}

impl<'a> Accumulator<'a> {
    fn slot(&mut self, obj: usize) -> &mut PoseGradient {
        match self.grads.iter().position(|(i, _)| *i == obj) {
            Some(p) => &mut self.grads[p].1,
            None => {
                self.grads.push((obj, PoseGradient::default()));
                &mut self.grads.last_mut().expect("just pushed").1
            }
        }
    }

    /// Chain rule through `D_owner(T_owner⁻¹ · T_subject · p)`. When
    /// `move_owner` is false the owner is held fixed for this term.
    fn add(&mut self, probe: &Probe, weights: &Weights, owner: usize, subject: usize, move_owner: bool) {
        if !self.enabled || weights.is_empty() {
            return;
        }
        let objs = self.scene.objects();
        let subj_center = objs[subject].pose.apply(&objs[subject].pivot());
        let owner_center = objs[owner].pose.apply(&objs[owner].pivot());
        let mut ds = PoseGradient::default();
        let mut dow = PoseGradient::default();
        for &(k, alpha) in weights {
            let g = probe.normals[k] * alpha;
            let w = probe.world[k];
            ds.translation += g;
            ds.rotation += (w - subj_center).cross(&g);
            dow.translation -= g;
            dow.rotation -= (w - owner_center).cross(&g);
        }
        let s = self.slot(subject);
        s.translation += ds.translation;
        s.rotation += ds.rotation;
        if move_owner {
            let o = self.slot(owner);
            o.translation += dow.translation;
            o.rotation += dow.rotation;
        }
    }
    /// Like [`Self::add`] for a tied argmin set with uniform weights `±1/n`:
    /// the weights are replaced by the minimum-norm convex combination of
    /// the per-sample gradients of the objects that move. Rotation parts are
    /// divided by the object's diagonal so both blocks share units.
    fn add_min(&mut self, probe: &Probe, weights: &Weights, owner: usize, subject: usize, move_owner: bool) {
        if !self.enabled || weights.len() < 2 {
            self.add(probe, weights, owner, subject, move_owner);
            return;
        }
        let objs = self.scene.objects();
        let sign = weights[0].1.signum();
        let mut parts: Vec<(usize, f64)> = Vec::new();
        if !objs[subject].is_static {
            parts.push((subject, 1.0));
        }
        if move_owner && !objs[owner].is_static {
            parts.push((owner, -1.0));
        }
        if parts.is_empty() {
            return;
        }
        let points: Vec<DVector<f64>> = weights
            .iter()
            .map(|&(k, _)| {
                let n = probe.normals[k] * sign;
                let mut v = DVector::zeros(6 * parts.len());
                for (slot, &(obj, dir)) in parts.iter().enumerate() {
                    let o = &objs[obj];
                    let arm = probe.world[k] - o.pose.apply(&o.pivot());
                    let r = arm.cross(&n) * (dir / o.diagonal());
                    let t = n * dir;
                    v.rows_mut(6 * slot, 6).copy_from_slice(&[r.x, r.y, r.z, t.x, t.y, t.z]);
                }
                v
            })
            .collect();
        let lambda = min_norm_weights(&points);
        let reweighted: Weights = weights
            .iter()
            .zip(lambda)
            .filter(|(_, l)| *l > 0.0)
            .map(|(&(k, _), l)| (k, sign * l))
            .collect();
        self.add(probe, &reweighted, owner, subject, move_owner);
    }
}

struct EdgeEval {
    cost: EdgeCost,
    grads: Vec<(usize, PoseGradient)>,
}

fn eval_edge(
    scene: &SceneState,
    e: &ResolvedEdge,
    opts: &EvalOptions,
    with_gradient: bool,
) -> Result<EdgeEval, ConstraintError> {
    let objs = scene.objects();
    let mut acc = Accumulator {
        scene,
        grads: Vec::new(),
        enabled: with_gradient,
    };
    let band_for = |subject: usize| opts.tie_band_fraction * objs[subject].diagonal();
    let mut cost = EdgeCost {
        edge: e.edge.clone(),
        penetration_term: 0.0,
        separation_term: 0.0,
        band_term: 0.0,
        total: 0.0,
        max_depth: 0.0,
        gap: 0.0,
        band_samples: None,
    };

    match e.edge.kind {
        ConstraintKind::Contact => {
            for (owner, subject) in [(e.from, e.to), (e.to, e.from)] {
                let pr = probe(&objs[owner], &objs[subject])?;
                let (pen, wp) = penetration(&pr.distances);
                let (sep, ws) = separation(&pr.distances, band_for(subject));
                acc.add(&pr, &wp, owner, subject, true);
                acc.add_min(&pr, &ws, owner, subject, true);
                cost.penetration_term += pen;
                cost.separation_term += sep;
                cost.max_depth = cost.max_depth.max(max_depth(&pr.distances));
                cost.gap = cost.gap.max(sep);
            }
        }
        ConstraintKind::Support | ConstraintKind::FlatSupport => {
            let (owner, subject) = (e.from, e.to);
            let pr = probe(&objs[owner], &objs[subject])?;
            cost.max_depth = max_depth(&pr.distances);
            let ((pen, sep), w_min) = abs_min(&pr.distances, band_for(subject));
            cost.gap = pen + sep;
            let band = match (e.edge.kind, e.sigma()) {
                (ConstraintKind::FlatSupport, Some(sigma)) => {
                    let b = band_mean(&pr.distances, sigma);
                    cost.band_samples = Some(b.as_ref().map_or(0, |x| x.2));
                    b
                }
                (ConstraintKind::FlatSupport, None) => unreachable!("sigma resolved by SceneState::resolve"),
                _ => None,
            };
            // Support term always applies; FlatSupport adds the band regularizer.
            cost.penetration_term = pen;
            cost.separation_term = sep;
            acc.add_min(&pr, &w_min, owner, subject, false);
            if let Some((value, w, _)) = band {
                cost.band_term = value;
                acc.add(&pr, &w, owner, subject, false);
            }
        }
    }
    cost.total = cost.penetration_term + cost.separation_term + cost.band_term;
    if !cost.total.is_finite() || !cost.max_depth.is_finite() {
        return Err(ConstraintError::NonFinite(e.edge.label()));
    }
    Ok(EdgeEval { cost, grads: acc.grads })
}

/// Evaluates every edge (concurrently) and reduces in sorted edge order.
pub fn evaluate(
    scene: &SceneState,
    graph: &ConstraintGraph,
    opts: &EvalOptions,
    with_gradient: bool,
) -> Result<Evaluation, ConstraintError> {
    let edges = scene.resolve(graph)?;
    evaluate_resolved(scene, &edges, opts, with_gradient)
}

pub(crate) fn evaluate_resolved(
    scene: &SceneState,
    edges: &[ResolvedEdge],
    opts: &EvalOptions,
    with_gradient: bool,
) -> Result<Evaluation, ConstraintError> {
    let evals: Vec<EdgeEval> = edges
        .par_iter()
        .map(|e| eval_edge(scene, e, opts, with_gradient))
        .collect::<Result<_, _>>()?;
    let mut gradients = vec![PoseGradient::default(); scene.len()];
    let mut total = 0.0;
    let mut costs = Vec::with_capacity(evals.len());
    for ev in evals {
        total += ev.cost.total;
        for (i, g) in ev.grads {
            gradients[i].rotation += g.rotation;
            gradients[i].translation += g.translation;
        }
        costs.push(ev.cost);
    }
    for (g, o) in gradients.iter_mut().zip(scene.objects()) {
        if o.is_static {
            *g = PoseGradient::default();
        }
    }
    Ok(Evaluation {
        breakdown: CostBreakdown { edges: costs, total },
        gradients,
    })
}

/// `(penetration_term, separation_term)` for `subject`'s samples probed
/// against `supporter`'s SDF.
pub fn directional_contact_cost(supporter: &SceneObject, subject: &SceneObject) -> Result<(f64, f64), ConstraintError> {
    let pr = probe(supporter, subject)?;
    Ok((penetration(&pr.distances).0, separation(&pr.distances, 0.0).0))
}

fn single_edge(scene: &SceneState, edge: &ConstraintEdge) -> Result<EdgeCost, ConstraintError> {
    let graph = ConstraintGraph {
        nodes: scene
            .objects()
            .iter()
            .map(|o| crate::relation_graph::GraphNode::new(o.id(), "", o.is_static))
            .collect(),
        edges: vec![edge.clone()],
    };
    let resolved = scene.resolve(&graph)?;
    Ok(eval_edge(scene, &resolved[0], &EvalOptions::default(), false)?.cost)
}

/// Bilateral contact cost: both directional costs summed.
pub fn contact_cost(scene: &SceneState, edge: &ConstraintEdge) -> Result<f64, ConstraintError> {
    expect_kind(edge, ConstraintKind::Contact)?;
    Ok(single_edge(scene, edge)?.total)
}

/// `|min D_supporter|` over the supported object's samples.
pub fn support_cost(scene: &SceneState, edge: &ConstraintEdge) -> Result<f64, ConstraintError> {
    expect_kind(edge, ConstraintKind::Support)?;
    Ok(single_edge(scene, edge)?.total)
}

/// Mean of `D_supporter` over the supported samples inside `(0, σ)`, or the
/// support cost when that band is empty.
pub fn flat_support_cost(scene: &SceneState, edge: &ConstraintEdge, sigma: f64) -> Result<f64, ConstraintError> {
    expect_kind(edge, ConstraintKind::FlatSupport)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ConstraintError::InvalidSigma(sigma));
    }
    let mut e = edge.clone();
    e.sigma = Some(sigma);
    let c = single_edge(scene, &e)?;
    Ok(if c.band_samples.unwrap_or(0) > 0 {
        c.band_term
    } else {
        c.penetration_term + c.separation_term
    })
}

fn expect_kind(edge: &ConstraintEdge, kind: ConstraintKind) -> Result<(), ConstraintError> {
    if edge.kind == kind {
        Ok(())
    } else {
        Err(ConstraintError::WrongEdgeKind {
            expected: kind,
            found: edge.kind,
        })
    }
}

pub fn total_cost(scene: &SceneState, graph: &ConstraintGraph) -> Result<CostBreakdown, ConstraintError> {
    Ok(evaluate(scene, graph, &EvalOptions::default(), false)?.breakdown)
}

/// Gradient of [`total_cost`] for every object (zero for static ones), with
/// indicator sets and argmin samples frozen at the current poses.
///
/// Support and FlatSupport terms treat the supporter as fixed: only the
/// supported object receives their gradient.
pub fn cost_gradient(scene: &SceneState, graph: &ConstraintGraph) -> Result<Vec<PoseGradient>, ConstraintError> {
    Ok(evaluate(scene, graph, &EvalOptions::default(), true)?.gradients)
}
