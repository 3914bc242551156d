use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json, SceneError};
use crate::constraints::{ObjectBuild, SceneObject, SceneState};
use crate::geometry::{io::load_mesh, SdfMode};
use crate::relation_graph::{
    map_to_constraints, ConstraintEdge, ConstraintGraph, ConstraintKind, FineEdge, FineRelationGraph, GraphNode,
    MappingOptions,
};
use crate::transforms::RigidPose;

/// On-disk scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    #[serde(default)]
    pub sampling: SamplingSettings,
    /// Band width applied to FlatSupport edges that do not set their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_sigma: Option<f64>,
    pub objects: Vec<ObjectEntry>,
    pub relations: Relations,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSettings {
    pub samples: usize,
    /// Base seed; object `i` without its own seed uses `seed + i`.
    pub seed: u64,
    pub sdf_mode: SdfMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
}

impl Default for SamplingSettings {
    fn default() -> Self {
        let b = ObjectBuild::default();
        Self {
            samples: b.samples,
            seed: b.seed,
            sdf_mode: b.sdf_mode,
            grid_resolution: b.grid_resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub mesh_path: String,
    #[serde(default)]
    pub pose: RigidPose,
    #[serde(rename = "static", default)]
    pub is_static: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Exactly one of the two blocks must be present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine: Option<Vec<FineEdge>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<ConstraintEdge>>,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Overrides `sampling.samples`.
    pub samples: Option<usize>,
    /// Overrides `flat_sigma`.
    pub flat_sigma: Option<f64>,
    pub mapping: MappingOptions,
}

/// A parsed scene with its built objects and constraint graph. `file` holds
/// the resolved settings (per-object seeds filled in, overrides applied).
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub file: SceneFile,
    pub scene: SceneState,
    pub graph: ConstraintGraph,
    pub base_dir: PathBuf,
}

impl LoadedScene {
    /// Scene file describing `scene` (same ids and order) with mesh paths
    /// valid from `out_dir`.
    pub fn to_file(&self, scene: &SceneState, out_dir: &Path) -> SceneFile {
        let same_dir = match (self.base_dir.canonicalize(), out_dir.canonicalize()) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        let mut file = self.file.clone();
        for entry in &mut file.objects {
            if let Some(o) = scene.get(&entry.id) {
                entry.pose = o.pose;
            }
            if !same_dir && Path::new(&entry.mesh_path).is_relative() {
                let p = self.base_dir.join(&entry.mesh_path);
                entry.mesh_path = p.canonicalize().unwrap_or(p).display().to_string();
            }
        }
        file
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn build_graph(file: &SceneFile, path: &Path, mapping: &MappingOptions) -> Result<ConstraintGraph, SceneError> {
    let nodes: Vec<GraphNode> = file
        .objects
        .iter()
        .map(|o| GraphNode::new(&o.id, o.label.clone().unwrap_or_else(|| o.id.clone()), o.is_static))
        .collect();
    let graph_err = |e: crate::relation_graph::RelationError| SceneError::schema(path, format!("relations: {e}"));
    let mut graph = match (&file.relations.fine, &file.relations.constraints) {
        (Some(_), Some(_)) => {
            return Err(SceneError::schema(
                path,
                "relations: give either 'fine' or 'constraints', not both",
            ))
        }
        (None, None) => return Err(SceneError::schema(path, "relations: one of 'fine' or 'constraints' is required")),
        (Some(fine), None) => map_to_constraints(
            &FineRelationGraph {
                nodes,
                edges: fine.clone(),
            },
            mapping,
        )
        .map_err(graph_err)?,
        (None, Some(edges)) => ConstraintGraph {
            nodes,
            edges: edges.clone(),
        },
    };
    if let Some(sigma) = file.flat_sigma {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(SceneError::schema(path, format!("flat_sigma must be positive, got {sigma}")));
        }
        for e in &mut graph.edges {
            if e.kind == ConstraintKind::FlatSupport && e.sigma.is_none() {
                e.sigma = Some(sigma);
            }
        }
    }
    graph.validate().map_err(graph_err)?;
    Ok(graph)
}

/// Parses and builds a scene with default options.
pub fn parse_scene(path: &Path) -> Result<LoadedScene, SceneError> {
    load_scene(path, &LoadOptions::default())
}

pub fn load_scene(path: &Path, opts: &LoadOptions) -> Result<LoadedScene, SceneError> {
    let mut file: SceneFile = read_json(path)?;
    if let Some(n) = opts.samples {
        file.sampling.samples = n;
    }
    if opts.flat_sigma.is_some() {
        file.flat_sigma = opts.flat_sigma;
    }
    let mut seen = HashSet::new();
    for o in &file.objects {
        if !seen.insert(o.id.as_str()) {
            return Err(SceneError::schema(path, format!("duplicate object id '{}'", o.id)));
        }
    }
    for (i, o) in file.objects.iter_mut().enumerate() {
        o.seed.get_or_insert(file.sampling.seed.wrapping_add(i as u64));
    }
    let graph = build_graph(&file, path, &opts.mapping)?;

    let base_dir = parent_dir(path);
    let sampling = file.sampling;
    let objects = file
        .objects
        .par_iter()
        .map(|entry| {
            let mesh_path = base_dir.join(&entry.mesh_path);
            if !mesh_path.is_file() {
                return Err(SceneError::MissingMesh {
                    id: entry.id.clone(),
                    path: mesh_path.display().to_string(),
                });
            }
            let mesh = load_mesh(&mesh_path).map_err(|source| SceneError::Mesh {
                id: entry.id.clone(),
                source,
            })?;
            let build = ObjectBuild {
                samples: sampling.samples,
                seed: entry.seed.expect("filled above"),
                sdf_mode: sampling.sdf_mode,
                grid_resolution: sampling.grid_resolution,
            };
            SceneObject::build(entry.id.clone(), Arc::new(mesh), &build, entry.pose, entry.is_static).map_err(|e| {
                match e {
                    crate::constraints::ConstraintError::Geometry(source) => SceneError::Mesh {
                        id: entry.id.clone(),
                        source,
                    },
                    other => other.into(),
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scene = SceneState::new(objects)?;
    scene.resolve(&graph)?;
    Ok(LoadedScene {
        file,
        scene,
        graph,
        base_dir,
    })
}

/// Writes `scene`'s poses back out in the schema of `loaded`.
pub fn write_scene(loaded: &LoadedScene, scene: &SceneState, path: &Path) -> Result<(), SceneError> {
    write_json(&loaded.to_file(scene, &parent_dir(path)), path)
}
