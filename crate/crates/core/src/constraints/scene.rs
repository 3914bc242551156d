use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Point3;

use super::ConstraintError;
use crate::geometry::{sample_surface, SdfField, SdfMode, SurfaceSamples, TriangleMesh};
use crate::relation_graph::{ConstraintEdge, ConstraintGraph, ConstraintKind};
use crate::transforms::RigidPose;

/// Default FlatSupport band width as a fraction of the supported object's
/// bounding-box diagonal.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.01;

/// Per-object precomputation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectBuild {
    pub samples: usize,
    pub seed: u64,
    pub sdf_mode: SdfMode,
    pub grid_resolution: Option<usize>,
}

impl Default for ObjectBuild {
    fn default() -> Self {
        Self {
            samples: 2048,
            seed: 0,
            sdf_mode: SdfMode::Grid,
            grid_resolution: None,
        }
    }
}

/// One rigid object: rest-frame mesh, its SDF and surface samples, and the
/// current pose.
#[derive(Debug, Clone)]
pub struct SceneObject {
    id: String,
    mesh: Arc<TriangleMesh>,
    sdf: Arc<SdfField>,
    samples: Arc<SurfaceSamples>,
    pub pose: RigidPose,
    pub is_static: bool,
    pivot: Point3<f64>,
    diagonal: f64,
}

impl SceneObject {
    pub fn new(
        id: impl Into<String>,
        mesh: Arc<TriangleMesh>,
        sdf: Arc<SdfField>,
        samples: Arc<SurfaceSamples>,
        pose: RigidPose,
        is_static: bool,
    ) -> Self {
        let bbox = mesh.aabb();
        Self {
            id: id.into(),
            pivot: samples.centroid().unwrap_or_else(|| bbox.center()),
            diagonal: bbox.diagonal(),
            mesh,
            sdf,
            samples,
            pose,
            is_static,
        }
    }

    /// Samples the surface and builds the SDF from `mesh`.
    pub fn build(
        id: impl Into<String>,
        mesh: Arc<TriangleMesh>,
        build: &ObjectBuild,
        pose: RigidPose,
        is_static: bool,
    ) -> Result<Self, ConstraintError> {
        let samples = Arc::new(sample_surface(&mesh, build.samples, build.seed)?);
        let sdf = Arc::new(SdfField::build(mesh.clone(), build.sdf_mode, build.grid_resolution)?);
        Ok(Self::new(id, mesh, sdf, samples, pose, is_static))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mesh(&self) -> &Arc<TriangleMesh> {
        &self.mesh
    }

    pub fn sdf(&self) -> &Arc<SdfField> {
        &self.sdf
    }

    pub fn samples(&self) -> &Arc<SurfaceSamples> {
        &self.samples
    }

    /// Body-frame point that pose updates rotate about (the sample centroid).
    pub fn pivot(&self) -> Point3<f64> {
        self.pivot
    }

    /// Rest-frame bounding-box diagonal.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }
}

/// The set of objects the optimizer mutates.
#[derive(Debug, Clone)]
pub struct SceneState {
    objects: Vec<SceneObject>,
    index: HashMap<String, usize>,
}

impl SceneState {
    pub fn new(objects: Vec<SceneObject>) -> Result<Self, ConstraintError> {
        let mut index = HashMap::with_capacity(objects.len());
        for (i, o) in objects.iter().enumerate() {
            if index.insert(o.id.clone(), i).is_some() {
                return Err(ConstraintError::DuplicateObject(o.id.clone()));
            }
        }
        Ok(Self { objects, index })
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SceneObject> {
        self.index.get(id).map(|&i| &self.objects[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn poses(&self) -> Vec<RigidPose> {
        self.objects.iter().map(|o| o.pose).collect()
    }

    pub fn set_pose(&mut self, i: usize, pose: RigidPose) {
        self.objects[i].pose = pose;
    }

    /// Copy with every pose left-multiplied by `g`.
    pub fn transformed(&self, g: &RigidPose) -> SceneState {
        let mut out = self.clone();
        for o in &mut out.objects {
            o.pose = g.compose(&o.pose);
        }
        out
    }

    /// Checks `graph` against the scene and returns its edges with object
    /// indices, default sigmas filled in, in sorted `(from, to, type)` order.
    pub fn resolve(&self, graph: &ConstraintGraph) -> Result<Vec<ResolvedEdge>, ConstraintError> {
        graph.validate()?;
        let mut edges = Vec::with_capacity(graph.edges.len());
        for e in &graph.edges {
            let (Some(from), Some(to)) = (self.position(&e.from), self.position(&e.to)) else {
                return Err(ConstraintError::DanglingEdge(e.label()));
            };
            let mut edge = e.clone();
            if e.kind == ConstraintKind::FlatSupport && e.sigma.is_none() {
                edge.sigma = Some(DEFAULT_SIGMA_FRACTION * self.objects[to].diagonal);
            }
            if let Some(s) = edge.sigma {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(ConstraintError::InvalidSigma(s));
                }
            }
            edges.push(ResolvedEdge { edge, from, to });
        }
        edges.sort_by(|x, y| {
            (&x.edge.from, &x.edge.to, x.edge.kind).cmp(&(&y.edge.from, &y.edge.to, y.edge.kind))
        });
        Ok(edges)
    }
}

/// A graph edge bound to scene object indices. For support kinds `from` is
/// the supporter.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedEdge {
    pub edge: ConstraintEdge,
    pub from: usize,
    pub to: usize,
}

impl ResolvedEdge {
    pub fn sigma(&self) -> Option<f64> {
        self.edge.sigma
    }
}
