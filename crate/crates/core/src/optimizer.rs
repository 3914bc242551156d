//! First-order pose descent on the total constraint cost.
//!
//! Every movable pose is updated jointly along the negative gradient in the
//! tangent space of [`RigidPose::retract`], with optional backtracking that
//! halves the step until the cost does not increase.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{evaluate_resolved, ConstraintError, EvalOptions, Evaluation, ResolvedEdge, SceneState};
use crate::relation_graph::ConstraintGraph;
use crate::transforms::RigidPose;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("failed to write trace: {0}")]
    Trace(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Radians per unit rotation gradient.
    pub step_rotation: f64,
    /// Scene units per unit translation gradient. `None` means 0.05 × the
    /// mean bounding-box diagonal of the movable objects.
    pub step_translation: Option<f64>,
    /// Stop once the relative cost decrease of an accepted step drops below this.
    pub tol_cost: f64,
    pub backtracking: bool,
    pub max_halvings: u32,
    /// Caps each step so the linearized cost drops by at most this fraction
    /// of its current value. Every term is zero at a satisfied scene, so this
    /// is a Polyak step toward zero; it keeps contacts from being crossed in
    /// one stride. `None` disables the cap.
    pub polyak_fraction: Option<f64>,
    /// Near-tie window for `min` terms, relative to each object's diagonal.
    /// Spreading the gradient over a flat contact face keeps it from tilting.
    pub tie_band_fraction: f64,
    /// Sampling seed the scene was built with; carried for reproducibility.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            step_rotation: 0.05,
            step_translation: None,
            tol_cost: 1e-6,
            backtracking: true,
            max_halvings: 8,
            polyak_fraction: Some(0.9),
            tie_band_fraction: 1e-3,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: &str| Err(OptimizerError::InvalidConfig(m.to_string()));
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.step_rotation > 0.0 && self.step_rotation.is_finite()) {
            return bad("step_rotation must be positive");
        }
        if let Some(t) = self.step_translation {
            if !(t > 0.0 && t.is_finite()) {
                return bad("step_translation must be positive");
            }
        }
        if !(self.tol_cost >= 0.0) {
            return bad("tol_cost must be non-negative");
        }
        if let Some(f) = self.polyak_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad("polyak_fraction must lie in (0, 1]");
            }
        }
        if !(self.tie_band_fraction >= 0.0 && self.tie_band_fraction.is_finite()) {
            return bad("tie_band_fraction must be non-negative");
        }
        Ok(())
    }

    /// Translation step actually used for `scene`.
    pub fn translation_step(&self, scene: &SceneState) -> f64 {
        if let Some(t) = self.step_translation {
            return t;
        }
        let diags: Vec<f64> = scene.objects().iter().filter(|o| !o.is_static).map(|o| o.diagonal()).collect();
        if diags.is_empty() {
            return 0.0;
        }
        0.05 * diags.iter().sum::<f64>() / diags.len() as f64
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            tie_band_fraction: self.tie_band_fraction,
        }
    }
}

/// One trace line. Record 0 describes the input scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub total: f64,
    pub max_penetration: f64,
    pub max_support_gap: f64,
    /// Fraction of the nominal step taken (0 for record 0).
    pub step_scale: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
}

impl OptimizationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), OptimizerError> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn record(iter: usize, ev: &Evaluation, step_scale: f64) -> IterationRecord {
    let (mut pen, mut gap) = (0.0f64, 0.0f64);
    for e in &ev.breakdown.edges {
        pen = pen.max(e.max_depth);
        gap = gap.max(e.gap);
    }
    IterationRecord {
        iter,
        total: ev.breakdown.total,
        max_penetration: pen,
        max_support_gap: gap,
        step_scale,
    }
}

/// Poses after moving every movable object by `-scale·step·gradient`.
fn stepped_poses(scene: &SceneState, ev: &Evaluation, rot: f64, trans: f64, scale: f64) -> Vec<RigidPose> {
    scene
        .objects()
        .iter()
        .zip(&ev.gradients)
        .map(|(o, g)| {
            if o.is_static || g.is_zero() {
                o.pose
            } else {
                o.pose.retract(
                    &(-scale * rot * g.rotation),
                    &(-scale * trans * g.translation),
                    &o.pivot(),
                )
            }
        })
        .collect()
}

fn with_poses(scene: &SceneState, poses: &[RigidPose]) -> SceneState {
    let mut out = scene.clone();
    for (i, p) in poses.iter().enumerate() {
        if !scene.objects()[i].is_static {
            out.set_pose(i, *p);
        }
    }
    out
}

/// Result of one descent iteration.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub scene: SceneState,
    pub record: IterationRecord,
    /// False when no step (even after backtracking) kept the cost from rising;
    /// `scene` is then the input scene.
    pub accepted: bool,
}

struct Descent<'a> {
    edges: Vec<ResolvedEdge>,
    cfg: &'a OptimizerConfig,
    opts: EvalOptions,
    trans: f64,
}

impl Descent<'_> {
    fn evaluate(&self, scene: &SceneState) -> Result<Evaluation, OptimizerError> {
        Ok(evaluate_resolved(scene, &self.edges, &self.opts, true)?)
    }

    /// Initial step scale in (0, 1].
    fn initial_scale(&self, scene: &SceneState, ev: &Evaluation) -> f64 {
        let Some(fraction) = self.cfg.polyak_fraction else {
            return 1.0;
        };
        // First-order decrease of a full step.
        let decrease: f64 = scene
            .objects()
            .iter()
            .zip(&ev.gradients)
            .filter(|(o, _)| !o.is_static)
            .map(|(_, g)| self.cfg.step_rotation * g.rotation.norm_squared() + self.trans * g.translation.norm_squared())
            .sum();
        if decrease > 0.0 {
            (fraction * ev.breakdown.total / decrease).min(1.0)
        } else {
            1.0
        }
    }

    fn step(&self, scene: &SceneState, ev: &Evaluation, iter: usize) -> Result<(StepOutcome, Evaluation), OptimizerError> {
        let mut scale = self.initial_scale(scene, ev);
        let mut halvings = 0;
        loop {
            let cand = with_poses(scene, &stepped_poses(scene, ev, self.cfg.step_rotation, self.trans, scale));
            let cev = self.evaluate(&cand)?;
            if !self.cfg.backtracking || cev.breakdown.total <= ev.breakdown.total {
                let rec = record(iter, &cev, scale);
                return Ok((
                    StepOutcome {
                        scene: cand,
                        record: rec,
                        accepted: true,
                    },
                    cev,
                ));
            }
            if halvings >= self.cfg.max_halvings {
                let rec = record(iter, ev, 0.0);
                return Ok((
                    StepOutcome {
                        scene: scene.clone(),
                        record: rec,
                        accepted: false,
                    },
                    ev.clone(),
                ));
            }
            halvings += 1;
            scale *= 0.5;
        }
    }
}

fn descent<'a>(scene: &SceneState, graph: &ConstraintGraph, cfg: &'a OptimizerConfig) -> Result<Descent<'a>, OptimizerError> {
    cfg.validate()?;
    Ok(Descent {
        edges: scene.resolve(graph)?,
        cfg,
        opts: cfg.eval_options(),
        trans: cfg.translation_step(scene),
    })
}

/// Performs one iteration from `scene`, numbering its record `iter`.
pub fn step(
    scene: &SceneState,
    graph: &ConstraintGraph,
    cfg: &OptimizerConfig,
    iter: usize,
) -> Result<StepOutcome, OptimizerError> {
    let d = descent(scene, graph, cfg)?;
    let ev = d.evaluate(scene)?;
    Ok(d.step(scene, &ev, iter)?.0)
}

/// Runs descent until `max_iters`, a relative cost change below `tol_cost`,
/// zero cost, or a rejected step. Static poses are never touched.
pub fn settle(
    scene: &SceneState,
    graph: &ConstraintGraph,
    cfg: &OptimizerConfig,
) -> Result<(SceneState, OptimizationTrace), OptimizerError> {
    let d = descent(scene, graph, cfg)?;
    let mut current = scene.clone();
    let mut ev = d.evaluate(&current)?;
    let mut trace = OptimizationTrace {
        records: vec![record(0, &ev, 0.0)],
    };
    if current.objects().iter().all(|o| o.is_static) {
        return Ok((current, trace));
    }
    for iter in 1..=cfg.max_iters {
        let before = ev.breakdown.total;
        if before == 0.0 || ev.gradients.iter().all(|g| g.is_zero()) {
            break;
        }
        let (out, next) = d.step(&current, &ev, iter)?;
        if !out.accepted {
            log::debug!("iteration {iter}: no descent step found, stopping");
            break;
        }
        trace.records.push(out.record);
        current = out.scene;
        ev = next;
        let after = ev.breakdown.total;
        if (before - after).abs() <= cfg.tol_cost * before {
            break;
        }
    }
    log::info!(
        "settled in {} iterations, cost {:.3e} -> {:.3e}",
        trace.len() - 1,
        trace.records[0].total,
        ev.breakdown.total
    );
    Ok((current, trace))
}
