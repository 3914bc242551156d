//! Small canonical scenes: unit cubes, a ground slab, an L-shaped bracket.
//! Used by the test suites and handy for experiments.

use std::sync::Arc;

use nalgebra::{Point2, Point3, Vector3};

use crate::constraints::{ObjectBuild, SceneObject, SceneState};
use crate::geometry::{shapes, SdfMode, TriangleMesh};
use crate::relation_graph::{ConstraintEdge, ConstraintGraph, GraphNode};
use crate::transforms::RigidPose;

/// Exact-SDF build with `samples` points.
pub fn exact_build(samples: usize, seed: u64) -> ObjectBuild {
    ObjectBuild {
        samples,
        seed,
        sdf_mode: SdfMode::Exact,
        grid_resolution: None,
    }
}

pub fn object(id: &str, mesh: TriangleMesh, pose: RigidPose, is_static: bool, build: &ObjectBuild) -> SceneObject {
    SceneObject::build(id, Arc::new(mesh), build, pose, is_static).expect("fixture meshes are valid")
}

/// Movable unit cube centered at `center`.
pub fn cube(id: &str, center: Vector3<f64>, build: &ObjectBuild) -> SceneObject {
    object(id, shapes::unit_cube(), RigidPose::from_translation(center), false, build)
}

/// Static 10 × 10 slab whose top face is the plane z = 0.
pub fn ground(id: &str, build: &ObjectBuild) -> SceneObject {
    let mesh = shapes::cuboid(Point3::new(-5.0, -5.0, -1.0), Point3::new(5.0, 5.0, 0.0));
    object(id, mesh, RigidPose::identity(), true, build)
}

/// Γ-shaped bracket in the x–z plane: a 0.2-wide post of height 1 standing
/// on its base at z = 0, with a 1.0-long arm at the top. Only the post
/// touches a floor beneath it, so most of the body overhangs.
pub fn bracket_mesh() -> TriangleMesh {
    let profile = [
        Point2::new(0.0, 0.0),
        Point2::new(0.2, 0.0),
        Point2::new(0.2, 0.8),
        Point2::new(1.0, 0.8),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
    ];
    shapes::prism(&profile, -0.25, 0.25).expect("valid profile")
}

/// Constraint graph over every object in `scene` with the given edges.
pub fn graph(scene: &SceneState, edges: Vec<ConstraintEdge>) -> ConstraintGraph {
    ConstraintGraph {
        nodes: scene
            .objects()
            .iter()
            .map(|o| GraphNode::new(o.id(), o.id(), o.is_static))
            .collect(),
        edges,
    }
}

pub fn scene(objects: Vec<SceneObject>) -> SceneState {
    SceneState::new(objects).expect("fixture ids are unique")
}
