//! Pairwise SDF cost terms and their pose gradients.
//!
//! Every object keeps its SDF and surface samples in its rest frame. To probe
//! object `i`'s field with object `j`'s samples, the samples are mapped by
//! `T_i⁻¹ ∘ T_j`, so costs depend only on relative poses.
//!
//! * Contact (bilateral): for each direction, the mean depth of penetrating
//!   samples plus `max(min D, 0)`.
//! * Support (unilateral): `|min D_supporter|` over the supported samples.
//! * FlatSupport: the band mean of `D` over supported samples with
//!   `0 < D < σ` ([`flat_support_cost`], falling back to the support cost when
//!   the band is empty). Inside a scene total the edge carries the support
//!   term plus the band mean as a regularizer, so sinking below the surface
//!   is still penalized.

mod cost;
mod min_norm;
mod scene;

pub use cost::{
    contact_cost, cost_gradient, directional_contact_cost, evaluate, flat_support_cost, support_cost, total_cost,
    CostBreakdown, EdgeCost, EvalOptions, Evaluation, PoseGradient, SURFACE_SNAP,
};
pub(crate) use cost::evaluate_resolved;
pub use scene::{ObjectBuild, ResolvedEdge, SceneObject, SceneState, DEFAULT_SIGMA_FRACTION};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::relation_graph::{ConstraintKind, RelationError};

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("empty samples on object '{0}'")]
    EmptySamples(String),
    #[error("edge {0} references an object missing from the scene")]
    DanglingEdge(String),
    #[error("duplicate object id '{0}'")]
    DuplicateObject(String),
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("expected a {expected:?} edge, got {found:?}")]
    WrongEdgeKind {
        expected: ConstraintKind,
        found: ConstraintKind,
    },
    #[error("non-finite cost on edge {0}")]
    NonFinite(String),
    #[error(transparent)]
    Graph(#[from] RelationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[cfg(test)]
mod tests;
